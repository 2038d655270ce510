"""Measure the implied constants and pin them in ``constants.toml``.

Run ``sqfree-lab calibrate --out constants.toml`` (or ``python -m sqfreelab.calibrate``)
to regenerate. Curve-bound constants are measured on seed 0 and pinned with
headroom so that other seeds can be used to validate them.
"""

from __future__ import annotations

import argparse
import math
import sys
from fractions import Fraction
from importlib import resources
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib
import tomli_w

from . import __version__, curves, nil
from .differencing import expansions, identities as ident

CURVE_HEADROOM = 1.5
ENVELOPE_HEADROOM = 2.0
CALIBRATION_SEED = 0
CURVE_TRIALS = 100


def load_constants(path: str | Path | None = None) -> dict:
    if path is None:
        text = resources.files("sqfreelab").joinpath("constants.toml").read_text()
    else:
        text = Path(path).read_text()
    return tomllib.loads(text)


def calibrate_taylor() -> dict[str, float]:
    return {kind: expansions.calibrate_kind(kind) for kind in expansions.KINDS}


def envelope_ratios(samples: int = 400, seed: int = 0) -> dict[str, float]:
    """max |exact - leading| / envelope for the weighted S-hat and second-difference combinations."""
    rng = np.random.default_rng(seed)
    worst = {"upsilon": 0.0, "qoppa": 0.0}
    X = 10**12
    for _ in range(samples):
        d = int(rng.integers(1000, 10001))
        a = int(rng.integers(1, d // 100 + 1))
        l1 = int(rng.integers(1, 4))
        l2 = int(rng.integers(l1 + 1, 6))
        b0 = Fraction(int(rng.integers(1, d // 200 + 2)), 1)
        v = Fraction(int(rng.integers(-3 * l1, 3 * l1 + 1)), l1)
        u = ident.upsilon(X, d, a, b0, v, l1, l2) - ident.upsilon_leading(X, d, a, b0, v, l1, l2)
        worst["upsilon"] = max(worst["upsilon"], float(abs(u) / ident.upsilon_envelope(X, d, a, b0, v, l1, l2)))
        q = ident.qoppa(X, d, a, b0, v, l1, l2) - ident.qoppa_leading(X, d, a, b0, v, l1, l2)
        worst["qoppa"] = max(worst["qoppa"], float(abs(q) / ident.qoppa_envelope(X, d, a, b0, v, l1, l2)))
    return worst


def calibrate_curves(seed: int = CALIBRATION_SEED, trials: int = CURVE_TRIALS) -> dict[str, float]:
    return {name: curves.max_ratio(curves.validate_family(name, trials, seed)) for name in curves.FAMILIES}


def weyl_constant(N: int = 10**4) -> float:
    """N D*_N / log N for the golden-ratio Weyl sequence."""
    g = (math.sqrt(5) - 1) / 2
    vals = np.mod(np.arange(1, N + 1) * g, 1.0)
    return nil.star_discrepancy(vals) * N / math.log(N)


def _pin(x: float, headroom: float) -> float:
    return float(f"{x * headroom:.3g}")


def calibrate_all() -> dict:
    taylor = calibrate_taylor()
    env = envelope_ratios()
    curve = calibrate_curves()
    witness, _ = curves.witness_constant()
    lip = nil.measure_lipschitz()
    return {
        "meta": {"version": __version__, "calibration_seed": CALIBRATION_SEED, "curve_headroom": CURVE_HEADROOM},
        "taylor": taylor,
        "envelope": {"C_upsilon": _pin(env["upsilon"], ENVELOPE_HEADROOM), "C_qoppa": _pin(env["qoppa"], ENVELOPE_HEADROOM),
                     "measured_upsilon": env["upsilon"], "measured_qoppa": env["qoppa"]},
        "curves": {
            "C": {k: _pin(v, CURVE_HEADROOM) for k, v in curve.items()},
            "measured": curve,
            "witness_c": math.floor(witness * 10) / 10,
            "witness_measured": witness,
            "c_r": 1e-2,
        },
        "nil": {
            "convention": "frac_neg",  # F(g(n)) = f3 + f1 {-f2}
            "C_F": 4.0,
            "C_F_measured": lip,
            "weyl_C": _pin(weyl_constant(), 1.5),
            "tau": 0.01,
            "kappa": 0.1,
            "eps": nil.DEFAULT_EPS,
        },
    }


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="python3 -m sqfreelab.calibrate", description="Re-measure the pinned constants.")
    parser.add_argument("out", nargs="?", type=Path, default=Path(__file__).with_name("constants.toml"))
    out = parser.parse_args(argv).out
    out.write_text(tomli_w.dumps(calibrate_all()))
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main(sys.argv[1:]))
