"""Command-line front end: decompose, verify, suite.

Configuration is a single JSON document; complex numbers are [re, im]
pairs.  Reports are written as report.json (stable key order) and
atoms.csv; identical config and seed give byte-identical output.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import suites
from .atoms import (
    DecomposeConfig,
    decompose,
    default_test_set,
    n_p_alpha,
    reconstruction_error,
    required_l,
    verify_atom,
)
from .kernel import HoloFunction
from .quadrature import build_grid


@dataclass
class RunConfig:
    n: int = 1
    p: float = 1.0
    alpha: float = 0.0
    N: int | None = None
    L: int | None = None
    delta: float = 1.0
    mu: float = 4.5
    kmax: int = 6
    grid: dict = field(default_factory=lambda: {"radial": 128, "angular": 256})
    function: dict = field(default_factory=dict)
    seed: int = 0
    out_dir: str = "."
    tail_tol: float = 1e-3
    bracket: str = "strict"

    @staticmethod
    def from_json(text: str) -> "RunConfig":
        data = json.loads(text)
        known = {f for f in RunConfig.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return RunConfig(**data)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=2)

    def validate(self) -> tuple[int, int]:
        if not 0.0 < self.p <= 1.0:
            raise ValueError(f"p = {self.p} violates 0 < p <= 1")
        if self.alpha <= -1.0:
            raise ValueError(f"alpha = {self.alpha} violates alpha > -1")
        nmin = n_p_alpha(self.p, self.alpha, self.n, self.bracket)
        N = nmin if self.N is None else self.N
        if N < nmin:
            raise ValueError(
                f"N = {N} violates the constraint N >= N_(p,alpha) = {nmin}"
            )
        lmin = required_l(self.p, self.alpha, self.n, N)
        L = lmin if self.L is None else self.L
        if L < lmin:
            raise ValueError(
                f"L = {L} violates the constraint "
                f"L >= max(N, floor((n+1+alpha)/p)+1) = {lmin}"
            )
        return N, L

    def build_function(self) -> HoloFunction:
        spec = self.function or {"poly": [[[0] * self.n, [1.0, 0.0]]]}
        poly = {}
        for exps, (re, im) in spec.get("poly", []):
            poly[tuple(int(e) for e in exps)] = complex(re, im)
        f = HoloFunction.from_poly(self.n, poly, label=spec.get("label", ""))
        for (re, im), pole, s in spec.get("kernel_terms", []):
            pole_c = [complex(a, b) for a, b in pole]
            f = f + HoloFunction.kernel_slice(self.n, pole_c, float(s),
                                              coeff=complex(re, im))
        return f

    def build_grid(self):
        g = dict(self.grid)
        return build_grid(self.n, self.alpha,
                          radial=int(g.get("radial", 128)),
                          angular=int(g.get("angular", 256)),
                          samples=int(g.get("samples", 200_000)),
                          seed=self.seed)


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        return float(x)
    if isinstance(x, (np.integer, int)):
        return int(x)
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, complex):
        return [x.real, x.imag]
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    return x


def _write_report(path: Path, payload: dict) -> None:
    path.write_text(
        json.dumps(_jsonable(payload), sort_keys=True, indent=1) + "\n",
        encoding="utf-8",
    )


ATOM_CSV_HEADER = [
    "k", "i", "center_re", "center_im", "radius", "lambda",
    "margin1", "margin2", "margin3", "margin4",
]


def cmd_decompose(cfg: RunConfig, out_dir: Path, refine: int = 0) -> int:
    N, L = cfg.validate()
    f = cfg.build_function()
    if refine:
        cfg.grid = {k: v * 2**refine if k in ("radial", "angular") else v
                    for k, v in cfg.grid.items()}
    grid = cfg.build_grid()
    dcfg = DecomposeConfig(N=N, L=L, delta=cfg.delta, mu=cfg.mu, kmax=cfg.kmax,
                           tail_tol=cfg.tail_tol, bracket=cfg.bracket, seed=cfg.seed)
    result = decompose(f, cfg.p, cfg.alpha, grid, dcfg)
    rows = []
    margins_all = []
    for a in result.atoms:
        ts = default_test_set(a.carrier, N, cfg.alpha, cfg.n, grid,
                              seed=cfg.seed, max_monomials=6)
        rep = verify_atom(a, cfg.p, np.inf, N, cfg.alpha, ts, grid)
        a.verification = rep
        c = rep["conditions"]
        m = [c["support"]["margin"], c["size"]["margin"],
             c["moment"]["margin"], c["higher_moments"]["margin"]]
        margins_all.append(m)
        center = a.carrier.center_array()
        row = [a.level, a.index]
        for x in center:
            row.extend([x.real, x.imag])
        row.extend([a.carrier.radius, a.lambda_adj] + m)
        rows.append(row)
    err = reconstruction_error(result)
    report = {
        "config": json.loads(cfg.to_json()),
        "params": result.params,
        "function": result.f_descr,
        "k0": result.diagnostics.get("k0"),
        "lambda0": result.lambda0,
        "atom_count": len(result.atoms),
        "coeff_lp_sum": result.diagnostics.get("coeff_lp_sum", result.lambda0**cfg.p),
        "reconstruction_error": err,
        "diagnostics": result.diagnostics,
        "atoms": [
            {
                "k": a.level, "i": a.index,
                "center": [ [x.real, x.imag] for x in a.carrier.center_array() ],
                "radius": a.carrier.radius,
                "carrier_volume": a.carrier_volume,
                "lambda_paper": a.lambda_paper,
                "lambda": a.lambda_adj,
                "sup_sampled": a.sup_sampled,
                "p": cfg.p,
                "moment_abs": abs(a.integrate_against(None)) if a.kind == "ball" else 0.0,
                "margins": m4,
                "passed": bool(a.verification["passed"]),
            }
            for a, m4 in zip(result.atoms, margins_all)
        ],
        "covers": {
            str(k): ld.cover.serialize()
            for k, ld in (result.pipeline.data or {}).items()
        },
    }
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_report(out_dir / "report.json", report)
    header = list(ATOM_CSV_HEADER)
    if cfg.n == 2:
        header = header[:4] + ["center2_re", "center2_im"] + header[4:]
    with open(out_dir / "atoms.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
    print(f"k0 = {result.diagnostics.get('k0')}  atoms = {len(result.atoms)}  "
          f"sum|lambda|^p = {report['coeff_lp_sum']:.6g}  "
          f"reconstruction_error = {err:.3e}")
    all_pass = all(r["passed"] for r in report["atoms"])
    return 0 if all_pass else 1


def cmd_verify(atom_file: Path, p: float | None = None) -> int:
    """Re-check the recorded atom conditions in a decomposition report."""
    try:
        data = json.loads(Path(atom_file).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        print(f"cannot read atom file: {exc}", file=sys.stderr)
        return 2
    atoms = data.get("atoms", [])
    if not atoms:
        print("warning: no atom records; verification is vacuous")
        return 0
    failures = 0
    for rec in atoms:
        try:
            pp = p if p is not None else float(rec["p"])
            vol = float(rec["carrier_volume"])
            sup = float(rec["sup_sampled"])
            lam = float(rec["lambda"])
            size_margin = (sup / lam) * vol ** (1.0 / pp)
            mom = float(rec["moment_abs"]) / lam
            mom_margin = mom / (1e-6 * vol ** (1.0 - 1.0 / pp))
            m = rec.get("margins", [0, 0, 0, 0])
            ok = (size_margin <= 1.0 + 1e-9 and mom_margin <= 1.0
                  and m[0] < 1e-12 and m[3] <= 1.0)
        except (KeyError, TypeError, ValueError) as exc:
            print(f"record (k={rec.get('k')}, i={rec.get('i')}): parse error {exc}",
                  file=sys.stderr)
            failures += 1
            continue
        if not ok:
            failures += 1
            print(f"FAIL atom k={rec.get('k')} i={rec.get('i')}: "
                  f"size_margin={size_margin:.6g} moment_margin={mom_margin:.3g} "
                  f"margins={m}")
    print(f"{len(atoms) - failures}/{len(atoms)} atoms pass")
    return 0 if failures == 0 else 1


SUITES = {
    "geometry": suites.suite_geometry,
    "maximal": suites.suite_maximal,
    "whitney": suites.suite_whitney,
    "polyproj": suites.suite_polyproj,
    "kernel": suites.suite_kernel,
    "atoms": suites.suite_atoms,
}


def cmd_suite(name: str, cfg: RunConfig, out_dir: Path) -> int:
    if name not in SUITES:
        print(f"unknown suite '{name}'; choose from {sorted(SUITES)}",
              file=sys.stderr)
        return 2
    report = SUITES[name](cfg)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_report(out_dir / f"suite_{name}.json", report)
    for chk in report["checks"]:
        status = "pass" if chk["passed"] else "FAIL"
        print(f"[{status}] {chk['name']}: {chk.get('measured', '')}")
    return 0 if report["passed"] else 1


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="bergmanatoms",
                                 description="atomic decomposition toolkit")
    ap.add_argument("--config", type=Path, default=None, help="JSON config path")
    ap.add_argument("--out", type=Path, default=Path("."), help="output directory")
    ap.add_argument("--seed", type=int, default=None, help="override config seed")
    ap.add_argument("--refine", type=int, default=0,
                    help="double the grid this many times")
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("decompose", help="run the decomposition pipeline")
    vp = sub.add_parser("verify", help="re-check recorded atom conditions")
    vp.add_argument("atom_file", type=Path)
    sp = sub.add_parser("suite", help="run a module verification suite")
    sp.add_argument("name")
    args = ap.parse_args(argv)

    cfg = RunConfig()
    if args.config is not None:
        try:
            cfg = RunConfig.from_json(args.config.read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            print(f"bad config: {exc}", file=sys.stderr)
            return 2
    if args.seed is not None:
        cfg.seed = args.seed
    try:
        if args.command == "decompose":
            return cmd_decompose(cfg, args.out, refine=args.refine)
        if args.command == "verify":
            return cmd_verify(args.atom_file, p=cfg.p if args.config else None)
        if args.command == "suite":
            return cmd_suite(args.name, cfg, args.out)
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 2


if __name__ == "__main__":
    sys.exit(main())
