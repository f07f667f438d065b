"""Command-line entry point: ``crac <subcommand> ...``.

Exit codes: 0 success, 1 usage error, 2 bound violation, 3 transport failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import re
import sys
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .analysis import (
    AXIS_PAIRS,
    SweepGrid,
    bias_parameters,
    case_study,
    optimize_gain,
    sweep,
    verify_bias_formula,
    write_sweep_csv,
)
from .geometry import EquatorDirection, QuadrantPartition
from .infotheory import BOUND_TOL, es_margins, evans_schulman_bound, information_gain
from .machines import named_unitary
from .ozawa import disturbance_eta, meter_expectations, noise_epsilon
from .geometry import phase_state
from .protocol import ProtocolConfig, exact_statistics, run_trials, write_trials_csv
from .qcore import KET0, KET1, ContractError

EXIT_OK, EXIT_USAGE, EXIT_BOUND, EXIT_TRANSPORT = 0, 1, 2, 3

_ANGLE = re.compile(
    r"^\s*(?P<sign>[+-])?\s*(?P<coef>\d+(?:\.\d*)?|\.\d+)?\s*\*?\s*pi\s*(?:/\s*(?P<den>\d+(?:\.\d*)?))?\s*$"
)


def parse_angle(text: str) -> float:
    """Radians, either a plain number or a ``[coef*]pi[/den]`` literal."""
    m = _ANGLE.match(str(text))
    if m:
        value = math.pi * float(m.group("coef") or 1.0) / float(m.group("den") or 1.0)
        return -value if m.group("sign") == "-" else value
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an angle in radians: {text!r}") from None


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


class UsageError(Exception):
    pass


def _default_seed() -> int:
    env = os.environ.get("CRAC_SEED")
    return int(env) if env else 0


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="JSON config (or run manifest); flags override it")
    p.add_argument("--eta", type=parse_angle, help="cloner angle in [0, pi/2]")
    p.add_argument("--axis-a", type=parse_angle)
    p.add_argument("--axis-b", type=parse_angle)
    p.add_argument("--phi", type=parse_angle, help="encoding direction (fixed mode)")
    p.add_argument("--phi-mode", choices=("fixed", "uniform"))
    p.add_argument("--prior", help="four comma-separated weights for bits 00,01,10,11")
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--shards", type=int)


def resolve_config(args) -> ProtocolConfig:
    base = {
        "axis_a": 0.0, "axis_b": math.pi / 2, "cloner_eta": math.pi / 4,
        "phi_mode": "fixed", "phi": math.pi / 4, "trials": 10_000,
        "seed": _default_seed(), "shards": 1,
    }
    if getattr(args, "config", None):
        data = json.loads(Path(args.config).read_text())
        base.update(data.get("config", data))
    flags = {
        "cloner_eta": args.eta, "axis_a": args.axis_a, "axis_b": args.axis_b,
        "phi": args.phi, "phi_mode": args.phi_mode, "trials": args.trials,
        "seed": args.seed, "shards": args.shards,
    }
    base.update({k: v for k, v in flags.items() if v is not None})
    if args.prior:
        base["bits_prior"] = tuple(float(x) for x in args.prior.split(","))
    if args.phi_mode == "uniform" and args.phi is None:
        base["phi"] = None
    if base["phi_mode"] == "uniform":
        base["phi"] = None
    if int(base["trials"]) <= 0:
        raise UsageError("--trials must be positive")
    try:
        return ProtocolConfig.from_dict(base)
    except ContractError as exc:
        raise UsageError(str(exc)) from exc


def write_manifest(out_dir: Path, subcommand: str, config: dict, seed, outputs: list[str]) -> Path:
    manifest = {
        "subcommand": subcommand,
        "config": config,
        "seed": seed,
        "version": __version__,
        "kernel_backend": kernels.BACKEND,
        "outputs": outputs,
    }
    path = out_dir / f"{subcommand}.manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def _emit(obj) -> None:
    print(json.dumps(obj, indent=2, sort_keys=True))


# -- subcommands --------------------------------------------------------------


def cmd_simulate(args) -> int:
    cfg = resolve_config(args)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    records, stats = run_trials(cfg, parallel=args.parallel)
    exact = exact_statistics(cfg)
    gain = information_gain(stats)
    exact_gain = information_gain(exact)
    xi_a, xi_b = exact.bias
    write_trials_csv(records, out / "trials.csv")
    (out / "stats.json").write_text(json.dumps(
        {"empirical": stats.to_dict(), "exact": exact.to_dict()}, indent=2) + "\n")
    write_manifest(out, "simulate", cfg.to_dict(), cfg.seed, ["trials.csv", "stats.json"])
    summary = {
        "i_a": gain.i_a, "i_b": gain.i_b, "total": gain.total,
        "exact": {"i_a": exact_gain.i_a, "i_b": exact_gain.i_b, "total": exact_gain.total},
        "bias": {"xi_a": xi_a, "xi_b": xi_b},
        "bounds": {"xi_sq_sum": xi_a ** 2 + xi_b ** 2, "one_bit": 1.0},
        "flags": {
            "exceeds_bias_bound": exact_gain.exceeds_bias_bound,
            "exceeds_one_bit": exact_gain.exceeds_one_bit,
            "guess_outcome_mismatch": exact_gain.guess_outcome_mismatch,
        },
        "classical_bits_used": stats.classical_bits_used,
        "pass": not (exact_gain.exceeds_bias_bound or exact_gain.exceeds_one_bit
                     or exact_gain.guess_outcome_mismatch),
    }
    _emit(summary)
    return EXIT_OK if summary["pass"] else EXIT_BOUND


def random_ic_check(n_configs: int, seed: int):
    """Random (axes, eta, phi) exact runs; returns (worst margins, failures)."""
    rng = np.random.default_rng(seed)
    failures = []
    worst = {"channel": math.inf, "sum": math.inf, "one_bit": math.inf}
    done = 0
    while done < n_configs:
        a, b = rng.uniform(0, 2 * math.pi, 2)
        if abs(math.sin(a - b)) < 1e-3:
            continue
        eta = rng.uniform(0, math.pi / 2)
        phi = rng.uniform(0, 2 * math.pi)
        cfg = ProtocolConfig(a, b, eta, "fixed", phi, trials=1)
        stats = exact_statistics(cfg)
        g = information_gain(stats)
        xa, xb = stats.bias
        m_ch = min(evans_schulman_bound(xa) - g.i_a, evans_schulman_bound(xb) - g.i_b)
        m_sum = xa ** 2 + xb ** 2 - g.total
        m_one = 1.0 - (xa ** 2 + xb ** 2)
        worst["channel"] = min(worst["channel"], m_ch)
        worst["sum"] = min(worst["sum"], m_sum)
        worst["one_bit"] = min(worst["one_bit"], m_one)
        if min(m_ch, m_sum, m_one) < -BOUND_TOL or g.guess_outcome_mismatch:
            failures.append(cfg.to_dict())
        done += 1
    return worst, failures


def cmd_verify(args) -> int:
    report = {}
    etas = np.linspace(0.0, math.pi / 2, args.eq10_grid)
    phis = np.linspace(0.0, 2 * math.pi, args.eq10_grid, endpoint=False)
    eq10 = verify_bias_formula(etas, phis, AXIS_PAIRS)
    dev = eq10.max_deviation
    if args.self_test == "negate-xi":
        # a deliberately wrong closed form: every bias flips sign
        dev = max(
            abs(bias_parameters(QuadrantPartition.orthogonal(), p, e).xi_a * 2)
            for e in etas for p in phis
        )
    report["eq10"] = {"max_deviation": dev, "swapped_labeling_deviation": eq10.max_deviation_swapped,
                      "matched": eq10.matched, "points": eq10.points, "pass": dev < 1e-10}
    xi, margin = es_margins(args.es_grid_step)
    report["evans_schulman"] = {"points": int(xi.size), "min_margin": float(margin.min()),
                                "pass": bool(margin.min() >= 0.0)}
    worst, failures = random_ic_check(args.ic_configs, args.seed if args.seed is not None else _default_seed())
    report["information_causality"] = {"configs": args.ic_configs, "worst_margins": worst,
                                       "violations": failures, "pass": not failures}
    ok = all(v["pass"] for v in report.values())
    report["pass"] = ok
    _emit(report)
    return EXIT_OK if ok else EXIT_BOUND


def _axes_from(args) -> QuadrantPartition:
    text = args.axes
    if text == "orthogonal":
        return QuadrantPartition.orthogonal()
    parts = text.split(",")
    if len(parts) != 2:
        raise UsageError("--axes takes 'orthogonal' or 'A,B' angles")
    try:
        return QuadrantPartition(EquatorDirection(parse_angle(parts[0])),
                                 EquatorDirection(parse_angle(parts[1])))
    except ContractError as exc:
        raise UsageError(str(exc)) from exc


def cmd_sweep(args) -> int:
    axes = _axes_from(args)
    grid = SweepGrid.uniform(args.n_eta, args.n_delta, axes)
    rows = sweep(grid, parallel=args.parallel)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_sweep_csv(rows, out / "sweep.csv")
    write_manifest(out, "sweep", {"axes": [axes.axis_a.angle, axes.axis_b.angle],
                                  "n_eta": args.n_eta, "n_delta": args.n_delta}, None, ["sweep.csv"])
    bad = [r for r in rows if r.i_total > r.xi_sq_sum + BOUND_TOL or r.i_total > 1 + BOUND_TOL]
    _emit({"rows": len(rows), "max_i_total": max(r.i_total for r in rows),
           "violations": len(bad), "csv": str(out / "sweep.csv")})
    return EXIT_OK if not bad else EXIT_BOUND


def cmd_optimize(args) -> int:
    axes = _axes_from(args)
    opt = optimize_gain(axes, args.objective)
    result = {"eta": opt.eta, "delta": float(opt.delta), "value": opt.value,
              "xi_a": opt.xi_a, "xi_b": opt.xi_b, "i_total": opt.i_total,
              "objective": args.objective,
              "summary": f"({opt.eta:.6f}, {float(opt.delta):.6f}, {round(opt.value, 9):g})"}
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "optimum.json").write_text(json.dumps(result, indent=2) + "\n")
        write_manifest(out, "optimize", {"axes": [axes.axis_a.angle, axes.axis_b.angle],
                                         "objective": args.objective}, None, ["optimum.json"])
    _emit(result)
    return EXIT_OK


def cmd_ozawa(args) -> int:
    try:
        u = named_unitary(args.unitary, args.eta)
    except ContractError as exc:
        raise UsageError(str(exc)) from exc
    psi = phase_state(args.psi)
    probe = KET1 if args.probe == 1 else KET0
    a_in, m_out = meter_expectations(u, psi, args.axis_a, probe)
    _emit({
        "unitary": args.unitary,
        "eta": args.eta,
        "psi_angle": args.psi,
        "epsilon": noise_epsilon(u, psi, args.axis_a, probe),
        "disturbance": disturbance_eta(u, psi, args.axis_b, probe),
        "a_in_expectation": a_in,
        "m_out_expectation": m_out,
    })
    return EXIT_OK


def cmd_case(args) -> int:
    _emit({k: (float(v) if isinstance(v, np.floating) else v) for k, v in case_study(args.which).items()})
    return EXIT_OK


def cmd_netsim(args) -> int:
    from .netsim import HandshakeRefused, ProtocolError, TransportError, serve_alice, serve_bob
    from .infotheory import mutual_information

    cfg = resolve_config(args)
    fh = open(args.transcript, "w") if args.transcript else None
    try:
        if args.role == "alice":
            if not args.listen:
                raise UsageError("alice needs --listen host:port")
            s = serve_alice(cfg, args.listen, ablate=args.ablate, transcript=fh)
            if s.refused:
                _emit({"role": "alice", "refused": True})
                return EXIT_TRANSPORT
            out = {"role": "alice", "audit": vars(s.audit),
                   "i_a": mutual_information(s.stats.joint_a),
                   "i_b": mutual_information(s.stats.joint_b),
                   "unread_bytes": s.unread_bytes}
            if args.out_dir:
                d = Path(args.out_dir)
                d.mkdir(parents=True, exist_ok=True)
                write_trials_csv(s.records, d / "trials.csv")
                write_manifest(d, "netsim", cfg.to_dict(), cfg.seed, ["trials.csv"])
        else:
            if not args.connect:
                raise UsageError("bob needs --connect host:port")
            r = serve_bob(cfg, args.connect, transcript=fh)
            out = {"role": "bob", "audit": vars(r.audit), "stats": r.stats.to_dict(),
                   "unread_bytes": r.unread_bytes}
        _emit(out)
        return EXIT_OK
    except HandshakeRefused as exc:
        print(f"handshake refused: {exc}", file=sys.stderr)
        return EXIT_TRANSPORT
    except (TransportError, ProtocolError, OSError) as exc:
        print(f"transport failure: {exc}", file=sys.stderr)
        return EXIT_TRANSPORT
    finally:
        if fh:
            fh.close()


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="crac", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", help="Monte Carlo run plus exact statistics")
    _add_config_flags(s)
    s.add_argument("--out-dir", default="crac-out")
    s.add_argument("--parallel", type=int, default=1)
    s.set_defaults(func=cmd_simulate)

    v = sub.add_parser("verify", help="bias formula, Evans-Schulman grid, random IC checks")
    v.add_argument("--es-grid-step", type=float, default=1e-3)
    v.add_argument("--ic-configs", type=int, default=200)
    v.add_argument("--eq10-grid", type=int, default=20)
    v.add_argument("--seed", type=int)
    v.add_argument("--self-test", choices=("negate-xi",))
    v.set_defaults(func=cmd_verify)

    w = sub.add_parser("sweep", help="tabulate biases and information over (eta, delta)")
    w.add_argument("--axes", default="orthogonal")
    w.add_argument("--n-eta", type=int, default=19)
    w.add_argument("--n-delta", type=int, default=19)
    w.add_argument("--out-dir", default="crac-out")
    w.add_argument("--parallel", type=int, default=1)
    w.set_defaults(func=cmd_sweep)

    o = sub.add_parser("optimize", help="balanced information-gain optimum")
    o.add_argument("--axes", default="orthogonal")
    o.add_argument("--objective", choices=("xi_sq_sum", "mutual_info_total"), default="xi_sq_sum")
    o.add_argument("--out-dir")
    o.set_defaults(func=cmd_optimize)

    z = sub.add_parser("ozawa", help="noise and disturbance of one interaction")
    z.add_argument("--unitary", choices=("identity", "swap", "pcc"), default="swap")
    z.add_argument("--eta", type=parse_angle)
    z.add_argument("--psi", type=parse_angle, default=0.0, help="equator angle of the object state")
    z.add_argument("--axis-a", type=parse_angle, default=0.0)
    z.add_argument("--axis-b", type=parse_angle, default=0.0)
    z.add_argument("--probe", type=int, choices=(0, 1), default=0)
    z.set_defaults(func=cmd_ozawa)

    c = sub.add_parser("case", help="reproduce case study A, B or C")
    c.add_argument("which", choices=("A", "B", "C", "a", "b", "c"))
    c.set_defaults(func=cmd_case)

    n = sub.add_parser("netsim", help="two-endpoint run over TCP")
    n.add_argument("role", choices=("alice", "bob"))
    _add_config_flags(n)
    n.add_argument("--listen")
    n.add_argument("--connect")
    n.add_argument("--transcript", help="JSON-lines dump of every frame")
    n.add_argument("--ablate", action="store_true", help="withhold the classical bit")
    n.add_argument("--out-dir")
    n.set_defaults(func=cmd_netsim)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"crac: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
