"""Command-line interface.

Exit codes: 0 success, 1 failed assertion or computation, 2 usage error,
3 input/output error.
"""
from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .config import Policy, default_policy
from .errors import GadgetLatticeError, ParseError

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3


@dataclass
class RunConfig:
    """Everything that determines the outputs of one invocation."""

    command: str
    inputs: list = field(default_factory=list)
    epsilon: float = 0.1
    eta: float = 0.1
    c2: float = 1.0
    c3: float = 2.0 ** -5
    c_N: float = 4.0
    c_s: float = 4.0
    max_qubits: int = 20
    output: str | None = None
    seed: int = 0
    jobs: int = 1

    def policy(self) -> Policy:
        return default_policy().with_(c2=self.c2, c3=self.c3, c_N=self.c_N, c_s=self.c_s,
                                      max_qubits=self.max_qubits)


class UsageError(Exception):
    pass


def parse_range(text: str) -> list[int]:
    """``"2..12"``, ``"4"`` or ``"2,3,5"``."""
    try:
        if ".." in text:
            a, b = text.split("..")
            return list(range(int(a), int(b) + 1))
        return [int(x) for x in text.split(",")]
    except ValueError:
        raise UsageError(f"bad range {text!r}") from None


def _accuracy(text: str) -> float:
    v = float(text)
    if not 0 < v <= 1:
        raise argparse.ArgumentTypeError("must lie in (0, 1]")
    return v


def _emit(text: str, path: str | None):
    if path:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def _config(args, command: str) -> RunConfig:
    pol = default_policy()
    return RunConfig(
        command=command,
        inputs=list(getattr(args, "inputs", None) or []),
        epsilon=getattr(args, "epsilon", 0.1),
        eta=getattr(args, "eta", 0.1),
        c2=args.c2 if args.c2 is not None else pol.c2,
        c3=args.c3 if args.c3 is not None else pol.c3,
        c_N=args.c_N if args.c_N is not None else pol.c_N,
        c_s=args.c_s if args.c_s is not None else pol.c_s,
        max_qubits=args.max_qubits if args.max_qubits is not None else pol.max_qubits,
        output=getattr(args, "output", None),
        seed=args.seed,
        jobs=args.jobs,
    )


# -- subcommands ------------------------------------------------------------

def _compile_one(path: str, cfg: RunConfig) -> tuple[str, bool, dict]:
    from .compiler import compile_hamiltonian, write_artifacts
    from .pauli import read_ham

    H = read_ham(path)
    name = Path(path).name.removesuffix(".ham")
    res = compile_hamiltonian(H, cfg.epsilon, cfg.eta, cfg.policy())
    write_artifacts(res, cfg.output or ".", name)
    return name, res.report.passed, {k: v for k, v in res.report.as_dict().items()
                                     if k != "stages"}


def cmd_compile(args) -> int:
    cfg = _config(args, "compile")
    if cfg.jobs > 1 and len(cfg.inputs) > 1:
        with ProcessPoolExecutor(cfg.jobs) as ex:
            results = list(ex.map(_compile_one, cfg.inputs, [cfg] * len(cfg.inputs)))
    else:
        results = [_compile_one(p, cfg) for p in cfg.inputs]
    ok = True
    for name, passed, rep in results:
        ok &= passed
        print(f"{name}: N={rep['N_total']} rounds={rep['rounds']} "
              f"log10(mu)={rep['log10_mu']:.1f} kappa={rep['final_kappa']} "
              f"degree={rep['final_degree']} nn={rep['nearest_neighbour']} "
              f"chain={rep['certificate_chain_ok']} {'PASS' if passed else 'FAIL'}")
    return EXIT_OK if ok else EXIT_FAIL


def _check_gadgets(cfg: RunConfig) -> dict:
    from .verify import run_gadget_suite

    rows = run_gadget_suite(cfg.policy(), cfg.epsilon, cfg.eta)
    return {"passed": all(r.passed(cfg.epsilon, cfg.eta) for r in rows),
            "rows": [{"name": r.name, "delta": r.delta, "epsilon_hat": list(r.epsilon_hat),
                      "eta_hat": list(r.eta_hat), "monotone": r.monotone} for r in rows]}


def _check_toy(cfg: RunConfig) -> dict:
    from .verify import toy_end_to_end

    return toy_end_to_end(epsilon=cfg.epsilon, eta=cfg.eta, seed=cfg.seed).as_dict()


def _check_physical(cfg: RunConfig) -> dict:
    from .verify import physical_checks

    rows = physical_checks(seed=cfg.seed, policy=cfg.policy())
    return {"passed": all(r.passed for r in rows),
            "rows": [{"name": r.name,
                      "partition": [asdict(p) for p in r.partition],
                      "dynamics": [asdict(d) for d in r.dynamics]} for r in rows]}


def _check_gentle(cfg: RunConfig) -> dict:
    from .verify import gentle_trials

    bad, worst = gentle_trials(1000, cfg.seed)
    return {"passed": bad == 0, "violations": bad, "worst_ratio": worst}


def _check_gap(cfg: RunConfig) -> dict:
    from .verify import gap_scaling_study

    st = gap_scaling_study(range(4, 13), policy=cfg.policy(), assert_slope=False)
    return {"passed": st.passed, "slope": st.slope, "threshold": st.threshold}


def _check_nogo(cfg: RunConfig) -> dict:
    from .errors import BoundViolated
    from .verify import nogo_demo

    try:
        rows = nogo_demo(range(2, 13))
    except BoundViolated as exc:
        return {"passed": False, "error": str(exc)}
    return {"passed": True, "rows": [asdict(r) for r in rows]}


CHECKS = {
    "gadgets": _check_gadgets,
    "toy": _check_toy,
    "physical": _check_physical,
    "gentle": _check_gentle,
    "gap": _check_gap,
    "nogo": _check_nogo,
}


def _run_check(name: str, cfg: RunConfig) -> tuple[str, dict]:
    return name, CHECKS[name](cfg)


def cmd_verify(args) -> int:
    cfg = _config(args, "verify")
    names = list(CHECKS) if "all" in args.checks else args.checks
    if cfg.jobs > 1:
        with ProcessPoolExecutor(cfg.jobs) as ex:
            results = list(ex.map(_run_check, names, [cfg] * len(names)))
    else:
        results = [_run_check(n, cfg) for n in names]
    out = Path(cfg.output) if cfg.output else None
    for name, res in results:
        if out:
            out.mkdir(parents=True, exist_ok=True)
            (out / f"{name}.json").write_text(json.dumps(res, indent=1, sort_keys=True) + "\n")
    print(f"{'check':<10} result")
    for name, res in results:
        print(f"{name:<10} {'PASS' if res['passed'] else 'FAIL'}")
    return EXIT_OK if all(r["passed"] for _, r in results) else EXIT_FAIL


def cmd_gadget_apply(args) -> int:
    from .gadgets import residual_check, split_product, split_three, subdivide, three_to_two
    from .pauli import Hamiltonian, read_ham, serialize_ham
    from .verify import gadget_suite, spectral_compare

    cfg = _config(args, "gadget apply")
    pol = cfg.policy()
    if args.input:
        H = read_ham(args.input)
        if args.kind not in ("subdivision", "three_to_two"):
            raise UsageError("--input works with subdivision and three_to_two")
        if not 0 <= args.term < len(H.terms):
            raise UsageError(f"--term must lie in 0..{len(H.terms) - 1}")
        t = H.terms[args.term]
        need = 2 if args.kind == "subdivision" else 3
        if t.weight < need or (args.kind == "three_to_two" and t.weight != 3):
            raise UsageError(f"term {args.term} has weight {t.weight}; {args.kind} needs "
                             f"{'exactly 3' if need == 3 else 'at least 2'}")
        rest = Hamiltonian(H.n_qubits, tuple(s for s in H.terms if s is not t))
        kw = dict(epsilon=cfg.epsilon, eta=cfg.eta, policy=pol)
        if args.kind == "subdivision":
            app = subdivide(rest, *split_product(t), **kw)
        else:
            app = three_to_two(rest, *split_three(t), **kw)
    else:
        suite = gadget_suite(pol, cfg.epsilon, cfg.eta)
        if args.kind not in suite:
            raise UsageError(f"unknown gadget {args.kind!r}; choose from {sorted(suite)}")
        app = suite[args.kind]
    from .gadgets import assemble

    H_s = assemble(app)
    _emit(serialize_ham(H_s), cfg.output)
    if args.manifest:
        Path(args.manifest).write_text(json.dumps(app.manifest(), indent=1, sort_keys=True,
                                                  default=str) + "\n")
    if not args.check:
        return EXIT_OK
    res = residual_check(app)
    rep = spectral_compare(app.target, app, epsilon=cfg.epsilon, eta=cfg.eta, policy=pol)
    print(f"residual={res:.3e} epsilon_hat={rep.epsilon_hat:.3e} eta_hat={rep.eta_hat:.3e}",
          file=sys.stderr)
    return EXIT_OK if res <= 1e-8 and rep.passed else EXIT_FAIL


def cmd_wstate_gap(args) -> int:
    from .verify import gap_scaling_study

    cfg = _config(args, "wstate gap")
    ns = parse_range(args.n)
    st = gap_scaling_study(ns, backend=args.backend, policy=cfg.policy(), assert_slope=False)
    if args.csv:
        _emit(st.csv(), args.csv)
    else:
        sys.stdout.write(st.csv())
    print(f"slope={st.slope:.4f} threshold={st.threshold} {'PASS' if st.passed else 'FAIL'}")
    return EXIT_OK if st.passed else EXIT_FAIL


def cmd_wstate_constants(args) -> int:
    from .wstate import WChainSpec, compute_constants

    cfg = _config(args, "wstate constants")
    lines = ["n,i,j,gamma,C,D,C_ge_1_over_n,D_le_2"]
    ok = True
    for n in parse_range(args.n):
        spec = WChainSpec.for_length(n, cfg.policy())
        i, j = (args.i or 1), (args.j or n)
        k = compute_constants(spec, i, j)
        good = k.C >= 1 / n and k.D <= 2
        ok &= good
        lines.append(f"{n},{i},{j},{spec.gamma_coupling!r},{k.C!r},{k.D!r},"
                     f"{k.C >= 1 / n},{k.D <= 2}")
    _emit("\n".join(lines) + "\n", args.csv)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_code_build(args) -> int:
    from .codes import build_code_hamiltonian, builtin, parse_css
    from .pauli import serialize_ham

    if args.css:
        code = parse_css(Path(args.css).read_text())
    else:
        name = args.type if args.type != "repetition" else f"repetition{args.n or 3}"
        code = builtin(name, args.a, args.b)
    H = build_code_hamiltonian(code)
    _emit(serialize_ham(H), args.output)
    return EXIT_OK


def cmd_layout_render(args) -> int:
    from .compiler import LatticeLayout, layout, render_dot, render_svg
    from .pauli import read_ham

    src = Path(args.input)
    H = None
    if src.suffix == ".json":
        d = json.loads(src.read_text())
        paths = {(u, v): [tuple(p) for p in pts] for u, v, pts in d["edges"]}
        lay = LatticeLayout(tuple(d["grid"]), {int(q): tuple(p) for q, p in d["positions"].items()},
                            sorted(paths), paths,
                            [(tuple(e), tuple(f), tuple(p)) for e, f, p in d["crossings"]],
                            d.get("refinement", 1), d.get("order", []))
        if args.hamiltonian:
            H = read_ham(args.hamiltonian)
    else:
        lay = layout(read_ham(src), args.order)
    text = render_svg(lay, H) if args.format == "svg" else render_dot(lay, H)
    _emit(text, args.output)
    return EXIT_OK


def cmd_nogo(args) -> int:
    from .verify import nogo_demo

    rows = nogo_demo(parse_range(args.n), args.family)
    lines = ["n,correlation,c_prime,expected"]
    lines += [f"{r.n},{r.correlation!r},{r.c_prime!r},{r.expected!r}" for r in rows]
    _emit("\n".join(lines) + "\n", args.csv)
    return EXIT_OK


# -- parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("run configuration")
    g.add_argument("--jobs", type=int, default=1, help="worker processes (default 1)")
    g.add_argument("--seed", type=int, default=0, help="seed for randomized checks")
    g.add_argument("--c2", type=float, help="second-order Delta prefactor")
    g.add_argument("--c3", type=float, help="third-order Delta prefactor")
    g.add_argument("--c-N", dest="c_N", type=float, help="ancilla bound prefactor")
    g.add_argument("--c-s", dest="c_s", type=float, help="soundness bound constant")
    g.add_argument("--max-qubits", type=int,
                   help="cap for exact diagonalization (env GADGETLATTICE_MAX_QUBITS)")
    acc = argparse.ArgumentParser(add_help=False)
    acc.add_argument("--epsilon", type=_accuracy, default=0.1, help="spectral accuracy")
    acc.add_argument("--eta", type=_accuracy, default=0.1, help="eigenvector accuracy")

    p = argparse.ArgumentParser(
        prog="gadgetlattice",
        description="Perturbation-gadget compiler from sparse Pauli Hamiltonians to "
                    "2D nearest-neighbour lattices, with numerical verification.")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("compile", parents=[common, acc],
                       help="run all compiler passes",
                       description="Compile sparse Hamiltonians to a 2D square lattice: "
                                   "locality reduction (subdivision, 3-to-2), degree reduction "
                                   "(edge subdivision, triangle), comb layout, W-chain long-range "
                                   "gadgets and crossing removal. Writes <name>.sim.ham, "
                                   ".layout.json, .cert.json and .report.json.")
    c.add_argument("inputs", nargs="+", help="target Hamiltonian files (.ham)")
    c.add_argument("-o", "--output", default=".", help="output directory")
    c.set_defaults(func=cmd_compile)

    v = sub.add_parser("verify", parents=[common, acc], help="run verification suites",
                       description="Numerical certification of the simulation definition: "
                                   "gadget spectral accuracy (gadgets), end-to-end toy compile "
                                   "with soundness and completeness (toy), partition function "
                                   "and dynamics bounds (physical), gentle measurement lemma "
                                   "(gentle), uncle-chain gap scaling (gap), correlation no-go "
                                   "(nogo). Writes one JSON report per check.")
    v.add_argument("checks", nargs="*", default=["all"], choices=[*CHECKS, "all"],
                   help="checks to run (default all)")
    v.add_argument("-o", "--output", help="directory for JSON reports")
    v.set_defaults(func=cmd_verify)

    ga = sub.add_parser("gadget", help="single gadget applications")
    gsub = ga.add_subparsers(dest="gadget_command", required=True)
    a = gsub.add_parser("apply", parents=[common, acc], help="apply one gadget",
                        description="Apply one perturbation gadget (subdivision, three_to_two, "
                                    "triangle, crossing, xy_crossing, long_range_N) and write "
                                    "the simulator Hamiltonian Delta H0 + Delta^k H1 + ... .")
    a.add_argument("kind", help="gadget name")
    a.add_argument("--input", help="Hamiltonian whose term --term is rewritten")
    a.add_argument("--term", type=int, default=0, help="index of the rewritten term")
    a.add_argument("-o", "--output", help="simulator .ham file (default stdout)")
    a.add_argument("--manifest", help="write the gadget manifest as JSON")
    a.add_argument("--check", action="store_true",
                   help="check the effective-Hamiltonian residual and the low spectrum")
    a.set_defaults(func=cmd_gadget_apply)

    w = sub.add_parser("wstate", help="W-state ancilla chain studies")
    wsub = w.add_subparsers(dest="wstate_command", required=True)
    wg = wsub.add_parser("gap", parents=[common], help="gap scan of the uncle chain H_W0",
                         description="Measure the spectral gap of the uncle Hamiltonian H_W0 "
                                     "(ground space |0..0>, |W>) and fit the log-log slope over "
                                     "n >= 4 against the exponent -6.13.")
    wg.add_argument("--n", default="2..12", help="chain lengths, e.g. 2..12")
    wg.add_argument("--csv", help="CSV output path (n,lambda2,lambda3,gap)")
    wg.add_argument("--backend", default="auto", choices=["auto", "dense", "sparse"])
    wg.set_defaults(func=cmd_wstate_gap)
    wc = wsub.add_parser("constants", parents=[common],
                         help="long-range gadget constants C and D",
                         description="Constants C and D of the W-chain long-range gadget for "
                                     "the chain Hamiltonian H_W with policy Gamma; checks "
                                     "C >= 1/n and D <= 2.")
    wc.add_argument("--n", default="2..10", help="chain lengths")
    wc.add_argument("--i", type=int, help="first site (1-based, default 1)")
    wc.add_argument("--j", type=int, help="second site (default n)")
    wc.add_argument("--csv", help="CSV output path")
    wc.set_defaults(func=cmd_wstate_constants)

    cd = sub.add_parser("code", help="stabilizer code Hamiltonians")
    csub = cd.add_subparsers(dest="code_command", required=True)
    cb = csub.add_parser("build", parents=[common], help="write a CSS code Hamiltonian",
                         description="Build H = -a sum A_r - b sum B_s for a CSS stabilizer "
                                     "code (repetition, Steane, surface(2) or a CSS file).")
    cb.add_argument("--type", default="steane", choices=["repetition", "steane", "surface2"])
    cb.add_argument("--n", type=int, help="repetition code length")
    cb.add_argument("--css", help="CSS code file instead of a builtin")
    cb.add_argument("--a", type=float, default=1.0, help="X-check weight")
    cb.add_argument("--b", type=float, default=1.0, help="Z-check weight")
    cb.add_argument("-o", "--output", help="output .ham file (default stdout)")
    cb.set_defaults(func=cmd_code_build)

    lay = sub.add_parser("layout", help="lattice layouts")
    lsub = lay.add_subparsers(dest="layout_command", required=True)
    lr = lsub.add_parser("render", parents=[common], help="draw a layout as SVG or DOT",
                         description="Render the comb-routed 2D layout of a 2-local Hamiltonian "
                                     "(or a compiled .layout.json) as a static SVG or DOT file.")
    lr.add_argument("input", help=".ham (2-local, degree <= 4) or .layout.json")
    lr.add_argument("--hamiltonian", help="with a .layout.json: draw this Hamiltonian's couplings")
    lr.add_argument("--order", default="index", choices=["index", "dfs"], help="baseline order")
    lr.add_argument("--format", default="svg", choices=["svg", "dot"])
    lr.add_argument("-o", "--output", help="output path (default stdout)")
    lr.set_defaults(func=cmd_layout_render)

    ng = sub.add_parser("nogo", parents=[common],
                        help="correlation through a chain ancilla",
                        description="Correlation <X_1 Pi X_n> through the ground state of a "
                                    "chain ancilla: 2/n for the W chain, 0 for a product chain. "
                                    "Also reports the resolvent constant C'.")
    ng.add_argument("--n", default="2..12", help="chain lengths")
    ng.add_argument("--family", default="w", choices=["w", "product"])
    ng.add_argument("--csv", help="CSV output path")
    ng.set_defaults(func=cmd_nogo)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except GadgetLatticeError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
