"""Deterministic ``.npz``-compatible archives.

``numpy.savez`` stamps zip entries with the current time, so two saves of the
same model differ byte-wise. These helpers pin the timestamp and entry order.
Every archive carries a ``magic`` entry naming its format and a ``meta`` JSON
entry with provenance.
"""

import json
import zipfile

import numpy as np

from . import __version__
from .errors import BadMagicError, FormatError

_EPOCH = (1980, 1, 1, 0, 0, 0)


def write_archive(path, magic: str, arrays: dict, meta: dict | None = None):
    entries = {"magic": np.array(magic), "meta": np.array(json.dumps({"tool": f"xfmap {__version__}", **(meta or {})}, sort_keys=True))}
    entries.update(arrays)
    with zipfile.ZipFile(path, "w", compression=zipfile.ZIP_STORED) as zf:
        for name, value in entries.items():
            info = zipfile.ZipInfo(name + ".npy", date_time=_EPOCH)
            info.external_attr = 0o644 << 16
            with zf.open(info, "w") as fh:
                np.lib.format.write_array(fh, np.asarray(value), allow_pickle=False)


def read_archive(path, magic: str) -> tuple[dict, dict]:
    """Load an archive and check its magic string; returns ``(arrays, meta)``."""
    try:
        with np.load(path, allow_pickle=False) as npz:
            data = {k: npz[k] for k in npz.files}
    except (FileNotFoundError, PermissionError, IsADirectoryError):
        raise
    except (OSError, ValueError, zipfile.BadZipFile) as exc:
        raise FormatError(f"{path}: not a readable archive ({exc})") from exc
    found = str(data.pop("magic", ""))
    if found != magic:
        raise BadMagicError(f"{path}: expected {magic} archive, found {found or 'no magic'}")
    meta = json.loads(str(data.pop("meta", "{}")))
    return data, meta
