"""Optional on-disk cache for limit-set samples.

Enabled by setting FLAGLAB_CACHE_DIR; keys combine the representation
digest with the sampling parameters, so the dimension pipelines become
re-entrant.  The directory is safe to delete at any time.
"""

from __future__ import annotations

import hashlib
import json
import os

import numpy as np

from .certify import FlagSample, limit_set_sample
from .subspaces import Subspace
from .words import str_to_word, word_to_str

ENV_VAR = "FLAGLAB_CACHE_DIR"


def cache_dir() -> str | None:
    return os.environ.get(ENV_VAR) or None


def _key(rep_digest: str, op: str, params: dict) -> str:
    blob = json.dumps({"rep": rep_digest, "op": op, **params}, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:24]


def _save_flags(path: str, flags: list[FlagSample]) -> None:
    arrays = {}
    meta = []
    for i, f in enumerate(flags):
        for k in f.ks:
            arrays[f"f{i}_k{k}"] = f.spaces[k].frame
        meta.append({"source": word_to_str(f.source), "ks": f.ks, "quality": f.quality})
    np.savez_compressed(path, meta=json.dumps(meta), **arrays)


def _load_flags(path: str) -> list[FlagSample]:
    with np.load(path, allow_pickle=False) as data:
        meta = json.loads(str(data["meta"]))
        out = []
        for i, entry in enumerate(meta):
            spaces = {
                k: Subspace(data[f"f{i}_k{k}"], check=False) for k in entry["ks"]
            }
            out.append(
                FlagSample(
                    source=str_to_word(entry["source"]),
                    spaces=spaces,
                    quality=float(entry["quality"]),
                )
            )
        return out


def cached_limit_set_sample(
    rep, rep_digest: str, ks, count: int, length: int, seed: int
) -> list[FlagSample]:
    """limit_set_sample backed by the cache directory when configured."""
    root = cache_dir()
    params = {"ks": sorted(int(k) for k in ks), "count": count, "length": length, "seed": seed}
    if root:
        os.makedirs(root, exist_ok=True)
        path = os.path.join(root, _key(rep_digest, "limit_set", params) + ".npz")
        if os.path.exists(path):
            try:
                return _load_flags(path)
            except Exception:
                os.remove(path)  # stale or corrupt: recompute
    flags, _ = limit_set_sample(rep, ks, count=count, length=length, seed=seed)
    if root:
        _save_flags(path, flags)
    return flags
