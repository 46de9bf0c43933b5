"""Plain-text key=value configuration shared by the CLI and calibration.

Recognized keys: alpha, a_t, a_f, window_a, chunk_size, lock_variant,
ath_offset_db, sofoo_order, seed.  Values are decimal; lock_variant is
one of pure_inverse, sum, wiener; ath_offset_db accepts "off".
"""

import math
from pathlib import Path

from .codec import EncodeConfig, LockVariant
from .psycho import ATH_DISABLED, MaskingParams

_LOCK_NAMES = {
    "pure_inverse": LockVariant.PURE_INVERSE,
    "sum": LockVariant.SUM,
    "wiener": LockVariant.WIENER,
}

DEFAULTS = {
    "alpha": 0.1,
    "a_t": 0.02,
    "a_f": 100.0,
    "window_a": 0.01,
    "chunk_size": 1024,
    "lock_variant": "pure_inverse",
    "ath_offset_db": "off",
    "sofoo_order": 0,
    "seed": 0,
}


def load_config(path) -> dict:
    cfg = dict(DEFAULTS)
    if path is None:
        return cfg
    p = Path(path)
    if not p.exists():
        return cfg
    for ln, line in enumerate(p.read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{p}:{ln}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in DEFAULTS:
            raise ValueError(f"{p}:{ln}: unknown key {key!r}")
        cfg[key] = value.strip()
    return cfg


def save_config(cfg: dict, path) -> None:
    lines = [f"{k}={cfg.get(k, DEFAULTS[k])}" for k in DEFAULTS]
    Path(path).write_text("\n".join(str(l) for l in lines) + "\n")


def masking_params(cfg: dict) -> MaskingParams:
    ath = cfg.get("ath_offset_db", "off")
    if isinstance(ath, str) and ath.strip().lower() in ("off", "inf", ""):
        ath_val = ATH_DISABLED
    else:
        ath_val = float(ath)
        if math.isinf(ath_val):
            ath_val = ATH_DISABLED
    return MaskingParams(
        alpha=float(cfg["alpha"]),
        a_t=float(cfg["a_t"]),
        a_f=float(cfg["a_f"]),
        window_width_a=float(cfg["window_a"]),
        ath_offset_db=ath_val,
    )


def encode_config(cfg: dict) -> EncodeConfig:
    lock = cfg["lock_variant"]
    if isinstance(lock, str):
        try:
            lock = _LOCK_NAMES[lock.strip().lower()]
        except KeyError:
            raise ValueError(f"unknown lock_variant {lock!r}") from None
    return EncodeConfig(
        chunk_size=int(cfg["chunk_size"]),
        lock_variant=LockVariant(lock),
        sofoo_order=int(cfg["sofoo_order"]),
        seed=int(cfg["seed"]),
    )
