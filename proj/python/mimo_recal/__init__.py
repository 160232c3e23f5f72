"""Nonlinear reciprocity mismatch simulator for TDD massive MIMO."""

import csv
import io
import json

from ._core import (
    ConfigError,
    DomainError,
    NumericalError,
    bussgang_lambda,
    bussgang_mu,
    bussgang_mu_prime,
    erfc,
    erfcx,
    expint_e1,
    orth_poly_psi,
    rate_from_sindr,
    run_csv,
    selftest,
    sspa_gain,
)

__all__ = [
    "ConfigError",
    "DomainError",
    "NumericalError",
    "bussgang_lambda",
    "bussgang_mu",
    "bussgang_mu_prime",
    "erfc",
    "erfcx",
    "expint_e1",
    "orth_poly_psi",
    "rate_from_sindr",
    "run",
    "run_csv",
    "selftest",
    "sspa_gain",
]

_INT_COLS = {"point", "order", "cal_q", "n_trials"}
_STR_COLS = {"scenario", "method"}


def run(config, sets=(), paper_scale=False, threads=0):
    """Run a scenario; config is a dict or JSON text. Returns a list of row dicts."""
    text = config if isinstance(config, str) else json.dumps(config)
    rows = []
    for row in csv.DictReader(io.StringIO(run_csv(text, list(sets), paper_scale, threads))):
        rows.append(
            {
                k: v if k in _STR_COLS else int(v) if k in _INT_COLS else float(v)
                for k, v in row.items()
            }
        )
    return rows
