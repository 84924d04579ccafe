"""``wvctx`` command line: simulate schemes, assess thresholds, audit models, run polytopes.

Exit codes: 0 success, 2 input error, 3 domain error, 4 internal invariant failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from . import bounds, onticmodels, polytope, schemes
from .qmath import DomainError, ValidationError, as_density, as_projector, ket_projector

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_DOMAIN = 3
EXIT_INTERNAL = 4

DEFAULT_TAGS = {
    "gaussian_position": ("thm1", "thm4"),
    "gaussian_momentum": ("thm2",),
    "qubit_pointer": ("thm3",),
    "coarse_grained": ("thm3",),
}

CSV_COLUMNS = (
    "kind",
    "parameter",
    "p_minus",
    "p_F",
    "p_d",
    "p_tilde",
    "p_m",
    "kd_re",
    "kd_im",
    "leading_order_p_minus",
    "residual_times_parameter",
    "theorem",
    "bound",
    "margin",
    "violated",
)


class ConfigError(ValueError):
    pass


class InvariantError(RuntimeError):
    pass


# --- config parsing ---------------------------------------------------------------------

_TOP_KEYS = {"schema", "scheme", "state", "projector", "postselection", "sweep", "theorems", "bins"}
_SCHEME_KEYS = {"kind", "s", "epsilon_pointer", "p_d", "noise_eps"}
_OPERATOR_KEYS = {"ket", "matrix"}
_SWEEP_KEYS = {"s", "epsilon_pointer"}


def _reject_unknown(obj: dict, allowed: set, where: str) -> None:
    if not isinstance(obj, dict):
        raise ConfigError(f"{where} must be an object")
    extra = set(obj) - allowed
    if extra:
        raise ConfigError(f"unknown key(s) in {where}: {sorted(extra)}")


def _real(v, where: str) -> float:
    if isinstance(v, bool):
        raise ConfigError(f"{where}: expected a number")
    if isinstance(v, (int, float)):
        return float(v)
    if isinstance(v, str):
        try:
            return float(Fraction(v.strip()))
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"{where}: cannot parse {v!r}") from exc
    raise ConfigError(f"{where}: expected a number, got {v!r}")


def _complex(v, where: str) -> complex:
    if isinstance(v, list):
        if len(v) != 2:
            raise ConfigError(f"{where}: complex pairs are [re, im]")
        return complex(_real(v[0], where), _real(v[1], where))
    if isinstance(v, str) and "j" in v:
        try:
            return complex(v.replace(" ", ""))
        except ValueError as exc:
            raise ConfigError(f"{where}: cannot parse {v!r}") from exc
    return complex(_real(v, where), 0.0)


def _operator(spec, where: str) -> np.ndarray:
    _reject_unknown(spec, _OPERATOR_KEYS, where)
    if len(spec) != 1:
        raise ConfigError(f"{where} needs exactly one of 'ket' or 'matrix'")
    if "ket" in spec:
        amps = np.array([_complex(a, where) for a in spec["ket"]])
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > 1e-9:
            raise ConfigError(f"{where}: amplitudes have norm {norm!r}, expected 1 within 1e-9")
        return ket_projector(amps)
    rows = spec["matrix"]
    if not isinstance(rows, list) or not all(isinstance(r, list) for r in rows):
        raise ConfigError(f"{where}: matrix must be a list of rows")
    return np.array([[_complex(v, where) for v in r] for r in rows])


@dataclass
class ExperimentConfig:
    kind: str
    parameters: list[float]
    noise_eps: float
    rho: np.ndarray
    E: np.ndarray
    Pi: np.ndarray
    theorems: tuple[str, ...]
    bins: int = 64

    def spec(self, value: float) -> schemes.SchemeSpec:
        if self.kind == "qubit_pointer":
            return schemes.SchemeSpec(self.kind, epsilon_pointer=value, noise_eps=self.noise_eps)
        return schemes.SchemeSpec(self.kind, s=value, noise_eps=self.noise_eps)


def parse_config(raw: dict) -> ExperimentConfig:
    _reject_unknown(raw, _TOP_KEYS, "config")
    if raw.get("schema") != 1:
        raise ConfigError("config must declare \"schema\": 1")
    for key in ("scheme", "state", "projector", "postselection"):
        if key not in raw:
            raise ConfigError(f"config is missing {key!r}")
    sch = raw["scheme"]
    _reject_unknown(sch, _SCHEME_KEYS, "scheme")
    kind = sch.get("kind")
    if kind not in schemes.SCHEME_KINDS:
        raise ConfigError(f"scheme.kind must be one of {schemes.SCHEME_KINDS}")
    pname = "epsilon_pointer" if kind == "qubit_pointer" else "s"
    params: list[float] = []
    if pname in sch:
        params.append(_real(sch[pname], f"scheme.{pname}"))
    if "p_d" in sch:
        if kind == "qubit_pointer":
            raise ConfigError("scheme.p_d is only meaningful for Gaussian pointers")
        pd = _real(sch["p_d"], "scheme.p_d")
        try:
            params.append(schemes.spread_for_disturbance(pd))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    if "sweep" in raw:
        _reject_unknown(raw["sweep"], _SWEEP_KEYS, "sweep")
        if set(raw["sweep"]) - {pname}:
            raise ConfigError(f"sweep for {kind} takes only {pname!r}")
        values = raw["sweep"].get(pname, [])
        if not isinstance(values, list):
            raise ConfigError("sweep values must be a list")
        params.extend(_real(v, f"sweep.{pname}") for v in values)
    if not params:
        raise ConfigError(f"no {pname} value given")
    theorems = tuple(raw.get("theorems", DEFAULT_TAGS[kind]))
    for t in theorems:
        if t not in bounds.THEOREM_ASSUMPTIONS:
            raise ConfigError(f"unknown theorem tag {t!r}")
    bins = raw.get("bins", 64)
    if not isinstance(bins, int) or isinstance(bins, bool) or bins < 2:
        raise ConfigError("bins must be an integer >= 2")
    try:
        rho = as_density(_operator(raw["state"], "state"))
        E = as_projector(_operator(raw["projector"], "projector"))
        Pi = as_projector(_operator(raw["postselection"], "postselection"))
    except ValidationError as exc:
        raise ConfigError(str(exc)) from exc
    cfg = ExperimentConfig(
        kind=kind,
        parameters=params,
        noise_eps=_real(sch.get("noise_eps", 0), "scheme.noise_eps"),
        rho=rho,
        E=E,
        Pi=Pi,
        theorems=theorems,
        bins=bins,
    )
    for p in params:
        try:
            cfg.spec(p)
        except ValidationError as exc:
            raise ConfigError(str(exc)) from exc
    return cfg


def load_config(path: str) -> ExperimentConfig:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    return parse_config(raw)


# --- simulate ------------------------------------------------------------------------


@dataclass
class RunReport:
    stats: schemes.ExperimentStats
    certificates: list[bounds.Certificate]
    notes: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "stats": self.stats.as_dict(),
            "certificates": [
                {
                    "theorem": c.theorem_tag,
                    "bound": c.bound_value,
                    "observed_p_minus": c.observed_p_minus,
                    "margin": c.margin,
                    "violated": c.violated,
                    "trivial": c.trivial,
                    "assumptions": c.describe_assumptions(),
                    "notes": list(c.notes),
                }
                for c in self.certificates
            ],
            "notes": self.notes,
        }


def _thread_count() -> int:
    raw = os.environ.get("WVCTX_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"WVCTX_THREADS must be an integer, got {raw!r}")
    return max(1, n)


def simulate_point(cfg: ExperimentConfig, value: float) -> RunReport:
    spec = cfg.spec(value)
    stats = schemes.run_scheme(spec, cfg.rho, cfg.E, cfg.Pi)
    if not (-1e-12 <= stats.p_minus <= stats.p_F + 1e-12):
        raise InvariantError(f"p_minus {stats.p_minus!r} outside [0, p_F]")
    certs, notes = [], []
    for tag in cfg.theorems:
        if bounds.TEMPLATE_OF[tag] == 2:
            ens = schemes.sigma_preparations(cfg.Pi, cfg.rho)
            post = schemes.noisy_postselection(cfg.Pi, cfg.noise_eps)
            c_s = schemes.c_s_value(ens, post)
            cert = bounds.bound_theorem(stats, tag, C_S=c_s, q_star=ens.q_star)
            notes.append(f"{tag}: C_S = {c_s:.12g}, q_star = {ens.q_star:.12g}")
        else:
            cert = bounds.bound_theorem(stats, tag)
        certs.append(cert)
    return RunReport(stats, certs, notes)


def run_simulation(cfg: ExperimentConfig) -> list[RunReport]:
    with ThreadPoolExecutor(max_workers=_thread_count()) as pool:
        return list(pool.map(lambda v: simulate_point(cfg, v), cfg.parameters))


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, float, np.floating)):
        return format(float(v), ".12g")
    return str(v)


def reports_to_csv(reports: list[RunReport]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for rep in reports:
        d = rep.stats.as_dict()
        resid = abs(rep.stats.p_minus - rep.stats.leading_order_p_minus) * rep.stats.parameter
        for c in rep.certificates:
            row = [d[k] for k in CSV_COLUMNS[:10]] + [resid, c.theorem_tag, c.bound_value, c.margin, c.violated]
            writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    reports = run_simulation(cfg)
    if args.format == "csv":
        _emit(reports_to_csv(reports), args.out)
    else:
        _emit(json.dumps({"points": [r.to_json() for r in reports]}, indent=2) + "\n", args.out)
    return EXIT_OK


# --- assess --------------------------------------------------------------------------


def cmd_assess(args) -> int:
    for name in ("pminus", "pf", "pd"):
        if getattr(args, name) is None:
            raise ConfigError(f"--{name} is required")
    p_minus = args.pminus * args.pf if args.conditional else args.pminus
    res = bounds.required_cs(p_minus, args.pf, args.pd, args.qstar)
    if args.format == "json":
        print(json.dumps({"required_c_s": res.c_s, "feasible": res.feasible, "p_minus": p_minus}))
    else:
        verdict = "feasible" if res.feasible else "infeasible: no C_S <= 1 certifies a violation"
        print(f"required C_S > {res.c_s:.6f} ({verdict})")
    return EXIT_OK


# --- models --------------------------------------------------------------------------


def cmd_models(args) -> int:
    cfg = load_config(args.config)
    if cfg.kind != "gaussian_position":
        raise ConfigError("models needs a gaussian_position config")
    post = schemes.noisy_postselection(cfg.Pi, cfg.noise_eps)
    ens = schemes.sigma_preparations(cfg.Pi, cfg.rho)
    data = onticmodels.extract_operational_data(cfg.rho, cfg.E, post, cfg.parameters[0], cfg.bins, ens)
    models = [
        onticmodels.build_minimal_disturbance_model(data),
        onticmodels.build_full_disturbance_model(data),
        onticmodels.build_psi_complete_model(*onticmodels.psi_complete_inputs(data)),
    ]
    reports = [onticmodels.audit_model(m, data) for m in models]
    for rep in reports:
        if not rep.reproduces_stats:
            raise InvariantError(f"{rep.model} does not reproduce the data (residual {rep.max_residual:.3g})")
    if args.format == "json":
        payload = {
            "audits": [
                {
                    "model": r.model,
                    "reproduces_stats": r.reproduces_stats,
                    "max_residual": r.max_residual,
                    "condition1_holds": r.condition1_holds,
                    "condition2_holds": r.condition2_holds,
                    "prep_nc_holds": r.prep_nc_holds,
                    "failing": r.failing,
                }
                for r in reports
            ],
            "models": [m.to_json() for m in models],
        }
        _emit(json.dumps(payload, indent=2) + "\n", args.out)
        return EXIT_OK
    lines = []
    for r in reports:
        prep = "n/a" if r.prep_nc_holds is None else ("holds" if r.prep_nc_holds else "FAILS")
        lines += [
            f"[{r.model}]",
            f"  reproduces statistics: {r.reproduces_stats} (max residual {r.max_residual:.3e})",
            f"  condition 1 (negative-outcome bound): {'holds' if r.condition1_holds else 'FAILS'}",
            f"  condition 2 (disturbance bound): {'holds' if r.condition2_holds else 'FAILS'}",
            f"  preparation noncontextuality: {prep}",
            f"  failing: {', '.join(r.failing) if r.failing else 'none'}",
        ]
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


# --- polytope ------------------------------------------------------------------------


def _rational_arg(text: str) -> Fraction:
    try:
        return polytope.to_fraction(text)
    except polytope.PolytopeError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _scenario(args) -> polytope.ScenarioParams:
    if args.pd is None or args.ptilde is None:
        raise ConfigError("--pd and --ptilde are required")
    return polytope.ScenarioParams(
        p_d=args.pd,
        p_tilde=args.ptilde,
        q_0=args.q0 if args.q0 is not None else Fraction(1, 2),
        q_star=args.qstar_r if args.qstar_r is not None else Fraction(1, 2),
    )


def cmd_polytope(args) -> int:
    params = _scenario(args)
    if args.pipeline == "lemma1":
        res = polytope.lemma1_pipeline(params)
        summary = {
            "pipeline": "lemma1",
            "assignment_vertices": len(res.assignment),
            "deterministic_vertices": len(res.deterministic),
            "reduced_vertices": len(res.reduced),
            "expected_facet_present": res.has_expected_facet(),
        }
        payload = {**summary, "reduced": res.reduced.to_json(), "hull": res.hull.to_json()}
    else:
        res = polytope.lemma2_pipeline(params)
        summary = {
            "pipeline": "lemma2",
            "reduced_vertices": len(res.reduced),
            "lifted_vertices": len(res.lifted),
            "lifted_dimension": res.lifted_dimension,
            "projected_vertices": len(res.projected),
            "expected_facet_present": res.has_expected_facet(),
        }
        payload = {**summary, "projected": res.projected.to_json(), "hull": res.hull.to_json()}
    if args.out:
        polytope.dump_json(payload, args.out)
    for k, v in summary.items():
        print(f"{k}: {v}")
    for c, b in res.hull.inequalities:
        terms = " ".join(f"{polytope.format_rational(a)}" for a in c)
        print(f"facet: [{terms}] . x + {polytope.format_rational(b)} >= 0")
    return EXIT_OK


# --- tradeoff ------------------------------------------------------------------------


def cmd_tradeoff(args) -> int:
    params = _scenario(args)
    if args.grid < 2:
        raise ConfigError("--grid must be at least 2")
    hull = polytope.lemma2_pipeline(params).hull if args.pipeline == "lemma2" else None
    pd, pt, qs = (float(params.p_d), float(params.p_tilde), float(params.q_star))
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = ["p_F", "C_S", "max_p_minus"] + (["polytope_max_p_minus"] if hull else [])
    writer.writerow(header)
    n = args.grid - 1
    for i in range(n + 1):
        for j in range(n + 1):
            pf, cs = Fraction(i, n), Fraction(j, n)
            row = [float(pf), float(cs), bounds.bound_template2(float(pf), pd, pt, float(cs), qs)]
            if hull is not None:
                best = polytope.max_coordinate(hull, {0: pf, 1: cs}, 2)
                row.append(None if best is None else float(best))
            writer.writerow([_fmt(v) for v in row])
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


# --- entry point ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wvctx", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="scheme statistics and bound certificates")
    sim.add_argument("--config", required=True)
    sim.add_argument("--out")
    sim.add_argument("--format", choices=("json", "csv"), default="json")
    sim.set_defaults(func=cmd_simulate)

    ass = sub.add_parser("assess", help="C_S needed to certify a violation")
    ass.add_argument("--pminus", type=float)
    ass.add_argument("--pf", type=float)
    ass.add_argument("--pd", type=float)
    ass.add_argument("--qstar", type=float, default=0.5)
    ass.add_argument("--conditional", action="store_true", help="--pminus is p_minus / p_F")
    ass.add_argument("--format", choices=("text", "json"), default="text")
    ass.set_defaults(func=cmd_assess)

    mod = sub.add_parser("models", help="build and audit the three ontic models")
    mod.add_argument("--config", required=True)
    mod.add_argument("--out")
    mod.add_argument("--format", choices=("text", "json"), default="text")
    mod.set_defaults(func=cmd_models)

    for name, func, helptext in (
        ("polytope", cmd_polytope, "exact tightness pipelines"),
        ("tradeoff", cmd_tradeoff, "grid of the p_minus, p_F, C_S tradeoff"),
    ):
        sp = sub.add_parser(name, help=helptext)
        sp.add_argument("--pd", type=_rational_arg)
        sp.add_argument("--ptilde", type=_rational_arg)
        sp.add_argument("--q0", type=_rational_arg)
        sp.add_argument("--qstar", dest="qstar_r", type=_rational_arg)
        sp.add_argument("--out")
        sp.set_defaults(func=func)
    sub.choices["polytope"].add_argument("--pipeline", choices=("lemma1", "lemma2"), required=True)
    sub.choices["tradeoff"].add_argument("--pipeline", choices=("formula", "lemma2"), default="formula")
    sub.choices["tradeoff"].add_argument("--grid", type=int, default=11)
    return p


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    try:
        return args.func(args)
    except DomainError as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except polytope.UnboundedError as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except (ConfigError, ValidationError, bounds.BoundInputError, polytope.PolytopeError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (InvariantError, AssertionError) as exc:
        print(f"internal invariant failure: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
