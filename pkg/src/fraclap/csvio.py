"""CSV artifacts with '#'-metadata headers and 17-significant-digit floats.

Every artifact the front end emits goes through :func:`write_csv`, so the
byte format is uniform: metadata lines ``# key = value`` (insertion
order), one header line of column names, then comma-separated rows.
Floats are printed with ``%.17g`` — enough digits that reading the file
back reproduces the binary values, which keeps reruns bit-identical and
makes content hashes meaningful.
"""

import hashlib
import io

import numpy as np

__all__ = ["content_hash", "format_float", "read_csv", "write_csv"]


def format_float(value):
    """17-significant-digit decimal form (lossless for binary64)."""
    return format(float(value), ".17g")


def _format_cell(value):
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format_float(value)


def content_hash(data):
    """Git-style blob hash (sha1 over ``blob <len>\\0<content>``)."""
    if isinstance(data, str):
        data = data.encode()
    h = hashlib.sha1()
    h.update(b"blob %d\0" % len(data))
    h.update(data)
    return h.hexdigest()


def write_csv(path, metadata, columns, rows):
    """Write one artifact; returns the text that was written.

    Parameters
    ----------
    path : str or Path or None
        Output file; ``None`` renders to text only.
    metadata : dict
        Emitted as ``# key = value`` lines in insertion order; list/array
        values are space-separated on one line.
    columns : sequence of str
        Header names, one per cell of each row.
    rows : iterable of sequences
        Cell values (str, int, bool or float-like).
    """
    buf = io.StringIO()
    for key, value in metadata.items():
        if isinstance(value, (list, tuple, np.ndarray)):
            value = " ".join(_format_cell(v) for v in value)
        else:
            value = _format_cell(value)
        buf.write(f"# {key} = {value}\n")
    buf.write(",".join(columns) + "\n")
    for row in rows:
        if len(row) != len(columns):
            raise ValueError(
                f"row of {len(row)} cells under {len(columns)} columns"
            )
        buf.write(",".join(_format_cell(cell) for cell in row) + "\n")
    text = buf.getvalue()
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text


def read_csv(source):
    """Parse an artifact back into ``(metadata, columns, data)``.

    ``source`` is a path or the CSV text itself (anything with a
    newline is treated as text).  Metadata values stay strings; the data
    block is returned as a float ndarray of shape (nrows, ncolumns).
    """
    if isinstance(source, str) and "\n" in source:
        lines = source.splitlines()
    else:
        with open(source) as fh:
            lines = fh.read().splitlines()
    metadata = {}
    at = 0
    for at, line in enumerate(lines):
        if not line.startswith("#"):
            break
        key, _, value = line[1:].partition("=")
        metadata[key.strip()] = value.strip()
    columns = lines[at].split(",")
    data = np.array(
        [[float(cell) for cell in line.split(",")]
         for line in lines[at + 1:] if line],
        dtype=float,
    )
    if data.size == 0:
        data = data.reshape(0, len(columns))
    return metadata, columns, data
