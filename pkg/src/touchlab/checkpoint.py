"""Weight containers: one .npz per artifact with a JSON spec and content hash.

The hash is blake2b over array names, shapes, dtypes, and raw bytes, so any
bit flip in any weight is detected at load. Encoders and reward-map modules
share this container.
"""

import hashlib
import json

import numpy as np

from .errors import CheckpointError

FORMAT_VERSION = 1


def weight_hash(arrays: dict) -> str:
    h = hashlib.blake2b(digest_size=16)
    for name in sorted(arrays):
        a = np.ascontiguousarray(arrays[name])
        h.update(name.encode())
        h.update(str(a.dtype).encode())
        h.update(str(a.shape).encode())
        h.update(a.tobytes())
    return h.hexdigest()


def save_checkpoint(path, kind: str, spec: dict, arrays: dict) -> str:
    digest = weight_hash(arrays)
    header = json.dumps(
        {"format_version": FORMAT_VERSION, "kind": kind, "spec": spec, "weight_hash": digest},
        sort_keys=True,
    )
    np.savez(path, __header__=np.frombuffer(header.encode(), dtype=np.uint8), **arrays)
    return digest


def load_checkpoint(path, expect_kind=None):
    try:
        with np.load(path) as z:
            data = {k: z[k] for k in z.files}
    except Exception as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    if "__header__" not in data:
        raise CheckpointError(f"{path} has no header record")
    header = json.loads(bytes(data.pop("__header__")).decode())
    if header.get("format_version") != FORMAT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version in {path}")
    digest = weight_hash(data)
    if digest != header["weight_hash"]:
        raise CheckpointError(f"weight hash mismatch in {path}")
    if expect_kind is not None and header["kind"] != expect_kind:
        raise CheckpointError(f"{path} holds a {header['kind']!r}, expected {expect_kind!r}")
    return header["kind"], header["spec"], data, digest
