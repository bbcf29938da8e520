"""Experiment harness: random limited-memory matrices, eigenvalues, dense check.

Each run follows one trajectory of pairs:

1. ``m - 1`` pairs are stored, the factor is computed from scratch and the
   spectrum is compared with a dense eigensolver.
2. One more pair is added below capacity (column append path).
3. One more pair is added at capacity, so the oldest pair is evicted first
   (Givens deletion followed by column append).

Example::

    qnspectrum --family bfgs --family sr1 --n 100 --n 500 --experiment all
"""
from __future__ import annotations

import argparse
import csv
import logging
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from .compact import UpdateFamily, sr1_accepts
from .oracle import MAX_DENSE_N, dense_build, dense_eigenvalues
from .pair_store import Pair, PairBuffer, load_matrix
from .spectrum import IncrementalSpectrum, relative_error

log = logging.getLogger("qnspectrum")

DEFAULT_GAMMA = 3.0
DEFAULT_PHI = 0.5
DEFAULT_GATE = 1e-13
CSV_HEADER = ["n", "family", "phi", "experiment", "re", "t_method", "t_oracle"]


@dataclass(frozen=True)
class ExperimentConfig:
    n: int
    family: UpdateFamily
    m: int = 5
    gamma: float = DEFAULT_GAMMA
    seed: int = 0
    experiment: int = 1
    oracle: bool = True
    initial: PairBuffer | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("m must be at least 1")
        if self.n < 2 * self.m + 2:
            raise ValueError(f"n={self.n} must be at least 2m+2={2 * self.m + 2}")
        if self.experiment not in (1, 2, 3):
            raise ValueError(f"experiment must be 1, 2 or 3, got {self.experiment}")
        if self.initial is not None:
            if self.initial.n != self.n:
                raise ValueError("loaded pairs have the wrong dimension")
            if len(self.initial) > self.m - 1:
                raise ValueError(f"at most m-1={self.m - 1} pairs may be loaded")

    @property
    def phi(self):
        return self.family.convex_phi


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    re: float | None
    wall_time_method: float
    wall_time_oracle: float | None
    eigenvalues: np.ndarray = field(repr=False, default=None)
    rebuilds: int = 0

    @property
    def experiment(self):
        return self.config.experiment

    def csv_row(self):
        cfg = self.config
        phi = cfg.phi
        return [
            cfg.n,
            cfg.family.kind,
            "" if phi is None else f"{phi:g}",
            cfg.experiment,
            "" if self.re is None else f"{self.re:.6e}",
            f"{self.wall_time_method:.6f}",
            "" if self.wall_time_oracle is None else f"{self.wall_time_oracle:.6f}",
        ]


def draw_pair(rng, n, family, prior, gamma):
    """Draw one admissible pair with i.i.d. uniform(-1, 1) entries.

    For the convex class ``s`` is flipped so that ``s^T y > 0``.  SR1 pairs
    are redrawn when the denominator safeguard against ``prior`` rejects them.
    """
    while True:
        s = rng.uniform(-1.0, 1.0, n)
        y = rng.uniform(-1.0, 1.0, n)
        sy = s @ y
        if sy == 0.0:
            continue
        if family.is_convex:
            if sy < 0:
                s = -s
        elif not sr1_accepts(prior, gamma, s, y):
            continue
        return Pair(s, y)


def _prior_for(buf):
    prior = buf.copy()
    if prior.full:
        prior.evict_oldest()
    return prior


def generate_random_pairs(n, m, seed, family, gamma=DEFAULT_GAMMA, count=None):
    """Buffer of capacity ``m`` filled with ``count`` (default ``m``) random pairs."""
    rng = np.random.default_rng(seed)
    buf = PairBuffer(n, m)
    for _ in range(m if count is None else count):
        buf.push(draw_pair(rng, n, family, _prior_for(buf), gamma))
    return buf


def _reference(cfg, buf):
    t0 = time.perf_counter()
    B = dense_build(buf, cfg.gamma, cfg.family)
    ref = dense_eigenvalues(B)
    return ref, time.perf_counter() - t0


def run_experiments(cfg, experiments=(1, 2, 3)):
    """Walk the three-stage trajectory once and report the requested stages."""
    wanted = set(experiments)
    use_oracle = cfg.oracle and cfg.n <= MAX_DENSE_N
    if cfg.oracle and not use_oracle:
        log.warning("n=%d exceeds %d; skipping dense comparison", cfg.n, MAX_DENSE_N)
    rng = np.random.default_rng(cfg.seed)

    if cfg.initial is not None:
        buf = PairBuffer(cfg.n, cfg.m)
        for p in cfg.initial:
            buf.push(p)
    else:
        buf = PairBuffer(cfg.n, cfg.m)
        for _ in range(cfg.m - 1):
            buf.push(draw_pair(rng, cfg.n, cfg.family, _prior_for(buf), cfg.gamma))

    reports = []
    t0 = time.perf_counter()
    tracker = IncrementalSpectrum.from_buffer(buf, cfg.family, cfg.gamma)
    spec = tracker.spectrum()
    elapsed = time.perf_counter() - t0

    for stage in (1, 2, 3):
        if stage > 1:
            pair = draw_pair(rng, cfg.n, cfg.family, _prior_for(tracker.buf), cfg.gamma)
            t0 = time.perf_counter()
            if not tracker.add_pair(pair):
                raise RuntimeError("pair rejected after passing the safeguard")
            spec = tracker.spectrum()
            elapsed = time.perf_counter() - t0
        if stage in wanted:
            re = t_oracle = None
            values = spec.values()
            if use_oracle:
                ref, t_oracle = _reference(cfg, tracker.buf)
                re = relative_error(values, ref)
            stage_cfg = ExperimentConfig(
                cfg.n, cfg.family, cfg.m, cfg.gamma, cfg.seed, stage, cfg.oracle, cfg.initial
            )
            reports.append(
                ExperimentReport(stage_cfg, re, elapsed, t_oracle, values, tracker.rebuilds)
            )
            log.debug("n=%d %s exp %d: RE=%s", cfg.n, cfg.family, stage, re)
        if stage >= max(wanted):
            break
    return reports


def run_experiment(cfg):
    return run_experiments(cfg, (cfg.experiment,))[0]


def format_table(reports):
    """Aligned text table, one block per family, rows by n, columns by experiment."""
    lines = []
    families = []
    for r in reports:
        if r.config.family not in families:
            families.append(r.config.family)
    for fam in families:
        rows = {}
        for r in reports:
            if r.config.family == fam:
                rows.setdefault(r.config.n, {})[r.experiment] = r.re
        lines.append(f"{fam}")
        lines.append(f"{'n':>6} | {'RE Exp 1':>12} | {'RE Exp 2':>12} | {'RE Exp 3':>12}")
        lines.append("-" * 53)
        for n in sorted(rows):
            cells = []
            for e in (1, 2, 3):
                v = rows[n].get(e)
                cells.append(f"{'-' if v is None else format(v, '.5e'):>12}")
            lines.append(f"{n:>6} | " + " | ".join(cells))
        lines.append("")
    return "\n".join(lines)


def build_parser():
    p = argparse.ArgumentParser(
        prog="qnspectrum",
        description="Eigenvalues of limited-memory quasi-Newton matrices via compact forms and QR updates.",
    )
    p.add_argument("--family", action="append", choices=["bfgs", "dfp", "sr1", "broyden"],
                   help="update family (repeatable; default: all four)")
    p.add_argument("--phi", type=float, default=DEFAULT_PHI, help="Broyden parameter in [0, 1]")
    p.add_argument("--n", action="append", type=int, help="dimension (repeatable; default 100 500 1000)")
    p.add_argument("--m", type=int, default=5, help="memory size")
    p.add_argument("--gamma", type=float, default=DEFAULT_GAMMA, help="B0 = gamma * I")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--experiment", choices=["1", "2", "3", "all"], default="all")
    p.add_argument("--csv", metavar="PATH", help="write one CSV row per run")
    p.add_argument("--no-oracle", action="store_true", help="skip the dense eigensolver comparison")
    p.add_argument("--re-gate", type=float, default=DEFAULT_GATE,
                   help="exit nonzero if any relative error exceeds this")
    p.add_argument("--load-s", metavar="PATH", help="initial S matrix (header 'n l' then n rows)")
    p.add_argument("--load-y", metavar="PATH", help="initial Y matrix, same layout as --load-s")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")

    families = [UpdateFamily.parse(f, args.phi) for f in (args.family or ["sr1", "bfgs", "dfp", "broyden"])]
    experiments = (1, 2, 3) if args.experiment == "all" else (int(args.experiment),)

    initial = None
    if bool(args.load_s) != bool(args.load_y):
        print("error: --load-s and --load-y must be given together", file=sys.stderr)
        return 2
    if args.load_s:
        initial = PairBuffer.from_matrices(load_matrix(args.load_s), load_matrix(args.load_y))
        sizes = [initial.n]
    else:
        sizes = args.n or [100, 500, 1000]

    reports = []
    failed = False
    for fam in families:
        for n in sizes:
            try:
                cfg = ExperimentConfig(n, fam, args.m, args.gamma, args.seed,
                                       experiments[0], not args.no_oracle, initial)
                reports.extend(run_experiments(cfg, experiments))
            except Exception as exc:  # noqa: BLE001 - report and keep sweeping
                log.error("run n=%d family=%s failed: %s", n, fam, exc)
                failed = True

    print(format_table(reports))
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_HEADER)
            for r in reports:
                writer.writerow(r.csv_row())

    bad = [r for r in reports if r.re is not None and not r.re <= args.re_gate]
    for r in bad:
        log.error("RE %.3e above gate for n=%d %s exp %d", r.re, r.config.n, r.config.family, r.experiment)
    return 1 if failed or bad else 0


if __name__ == "__main__":
    sys.exit(main())
