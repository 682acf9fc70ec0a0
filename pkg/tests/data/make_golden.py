"""Regenerate the frozen outputs (run from tests/data).

Only do this after an intentional change to fitting or output format.  The
golden documents pin the byte-level output of every subcommand, and
``claims_like_expected.json`` pins the bandwidth, BIC row and k=2 mixture
fitted to ``claims_like.csv``.
"""

import contextlib
import io
import warnings

from rigkit import cli, kde, mixture
from rigkit.dataio import dumps, ingest

CASES = {
    "fit-rig": ["--weight-col", "weight"],
    "fit-contaminated": ["--weight-col", "weight"],
    "fit-contaminated-em": [],
    "fit-mixture": ["--weight-col", "weight"],
    "select-k": ["--weight-col", "weight"],
    "kde": [],
}


def argv(name):
    sub = name.removesuffix("-em")
    return [sub, "--input", "cli_sample.csv", "--value-col", "income", *CASES[name]]


def claims_expected():
    x = ingest("claims_like.csv", "amount").values
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        sel = mixture.select_k(x, seed=cli.DEFAULT_SEED)
    p = sel.fits[2].params
    return {
        "gamma_lcv": kde.select_bandwidth(x).gamma_hat,
        "bic": sel.bic,
        "best_k": sel.best_k,
        "k2": {"pi": p.pi, "theta": p.theta, "gamma": p.gamma},
    }


if __name__ == "__main__":
    with open("claims_like_expected.json", "w", encoding="utf-8") as fh:
        fh.write(dumps(claims_expected()))
    for name in CASES:
        buf = io.StringIO()
        with contextlib.redirect_stdout(buf):
            status = cli.main(argv(name))
        assert status == 0, (name, status)
        with open(f"golden/{name}.json", "w", encoding="utf-8") as fh:
            fh.write(buf.getvalue())
