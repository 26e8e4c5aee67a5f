"""Command-line front door: verification suites, sweeps, and one-off evaluations.

Commands: verify, sweep, recipe {evaluate,threshold,predict}, moment
{pipeline,sweep}, eis eval, geom {volume,check-cosets}, lvalue. Output in
text, json (schema 1), or csv; exit status 0 iff every check passes.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import characters, eisenstein, geometry, lfunctions, moment, recipe, special
from .characters import character_by_address, level_data, quadratic_character
from .errors import ConfigError, EisenlabError
from .reporting import MomentReport, make_report, reports_to_csv, reports_to_json, reports_to_text

DEFAULT_SEED = 1


@dataclass
class RunConfig:
    command: str
    parameters: dict = field(default_factory=dict)
    output_format: str = "text"
    thread_count: int = 1
    seed: int = DEFAULT_SEED


_KNOWN_KEYS = {
    "suite", "format", "threads", "seed", "perturb", "N", "T", "Y", "char",
    "kind", "eta", "etap", "schedule", "routes", "out", "s", "z", "truncate",
    "X",
}


def load_config_file(path: str) -> dict[str, dict[str, str]]:
    """Flat key = value lines under [verify] / [sweep] sections."""
    sections: dict[str, dict[str, str]] = {}
    current = "global"
    sections[current] = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if line.startswith("[") and line.endswith("]"):
                current = line[1:-1].strip()
                sections.setdefault(current, {})
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            key, val = (part.strip() for part in line.split("=", 1))
            if key not in _KNOWN_KEYS:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            sections[current][key] = val
    return sections


# -- verify suite -------------------------------------------------------------------


def _check_dbw(cfg: RunConfig) -> list[MomentReport]:
    out = []
    for T in (0.0, 0.1, 0.5, 1.0):
        t0 = time.time()
        v = special.dbw_integral(T)
        out.append(
            make_report(f"dbw T={T}", v, 8 * math.pi**3, 1e-7, policy="abs",
                        metadata={"runtime_ms": 1000 * (time.time() - t0)})
        )
    return out


def _check_gauss(cfg: RunConfig) -> list[MomentReport]:
    worst = 0.0
    count = 0
    for q in range(1, 201):
        for chi in characters.enumerate_characters(q):
            if not chi.primitive:
                continue
            tau = characters.gauss_sum(chi)
            worst = max(worst, abs(abs(tau) ** 2 - q))
            count += 1
    return [make_report("gauss-sum law q<=200", worst, 0.0, 1e-9, policy="abs",
                        metadata={"characters": count})]


def _check_mellin(cfg: RunConfig) -> list[MomentReport]:
    from scipy.integrate import quad

    out = []
    for s in (1.0, 2.0, 1 + 1j):
        num_re = quad(lambda x: (moment.k0_squared_tail(x) * x ** (s - 1)).real
                      if s != 1 else moment.k0_squared_tail(x), 0, 60,
                      limit=200, epsabs=1e-13)[0]
        if isinstance(s, complex) and s.imag:
            num_im = quad(lambda x: (moment.k0_squared_tail(x) * x ** (s - 1)).imag,
                          0, 60, limit=200, epsabs=1e-13)[0]
            num = complex(num_re, num_im)
        else:
            num = num_re
        out.append(make_report(f"mellin pair s={s}", num, moment.mellin_G(s), 1e-8, policy="abs"))
    out.append(make_report("G(1) = 1/2", moment.mellin_G(1.0), 0.5, 1e-8, policy="abs"))
    out.append(make_report("s G(s) -> pi^2/4", 1e-10 * moment.mellin_G(1e-10),
                           math.pi**2 / 4, 1e-8, policy="abs"))
    return out


def _seeded_states(seed: int, n_states: int = 10):
    rng = np.random.default_rng(seed)
    chars = [
        characters.enumerate_characters(1)[0],
        quadratic_character(5),
        [c for c in characters.enumerate_characters(7) if c.primitive and not c.is_real][0],
    ]
    states = []
    for k in range(n_states):
        chi = chars[k % len(chars)]
        eps = tuple(int(e) for e in rng.choice([1, -1], 4))
        margins = rng.uniform(0.2, 0.45, 4)
        alpha = tuple(eps[j] * margins[j] for j in range(4))
        kind = "quadratic" if chi.is_real else "complex"
        states.append((recipe.ShiftState(eps, alpha, 0.0, max(chi.modulus, 1), kind), chi))
    return states


def _check_ramanujan(cfg: RunConfig) -> list[MomentReport]:
    out = []
    for i, (st, chi) in enumerate(_seeded_states(cfg.seed)):
        brute, tail = recipe.brute_diagonal_sum(st, chi, X=100_000)
        closed = recipe.ramanujan_ratio(st, chi)
        resid = abs(brute - closed)
        out.append(
            make_report(f"ramanujan state {i} (q={chi.modulus})", resid, 0.0, tail,
                        policy="abs", metadata={"tail_bound": tail})
        )
    return out


def _check_eisenstein(cfg: RunConfig) -> list[MomentReport]:
    rng = np.random.default_rng(cfg.seed)
    triv = characters.enumerate_characters(1)[0]
    out = []
    for N in (5, 13):
        model = eisenstein.EisensteinModel(triv, quadratic_character(N), 2.0)
        worst = 0.0
        for _ in range(10):
            z = complex(rng.uniform(-0.45, 0.45), rng.uniform(0.8, 3.0))
            ev = eisenstein.evaluate(model, z)
            orc = eisenstein.lattice_sum_reference(z, model)
            worst = max(worst, abs(ev - orc.value) / abs(ev))
        out.append(make_report(f"eisenstein oracle N={N}", worst, 0.0, 1e-8, policy="abs"))
    return out


def _check_residue(cfg: RunConfig) -> list[MomentReport]:
    out = []
    for N in (5, 13):
        for Y in (2.0, 8.0):
            ctx = moment.PipelineContext(N, quadratic_character(N), Y)
            res = moment.residue_at_zero(ctx)
            exp = lfunctions.laurent_at(lambda z: moment.integrand_H(z, ctx), 0.0, 3, 4,
                                        radius=0.4)
            rel = abs(res - exp.coefficient(-1)) / abs(res)
            out.append(make_report(f"residue vs contour N={N} Y={Y}", rel, 0.0, 1e-6,
                                   policy="abs"))
    return out


def _check_tripleroute(cfg: RunConfig) -> list[MomentReport]:
    out = []
    for N, tol in ((5, 1e-6), (13, 1e-5)):
        ctx = moment.PipelineContext(N, quadratic_character(N), 2.0)
        routes = moment.cuspzone_routes(ctx)
        ref = routes["coefficient_sum"]
        for name in ("quadrature", "contour"):
            rel = abs(routes[name] - ref) / abs(ref)
            out.append(make_report(f"triple-route {name} N={N}", rel, 0.0, tol, policy="abs"))
    return out


def _check_corollary(cfg: RunConfig) -> list[MomentReport]:
    return [
        recipe.gaussian_ratio_check(101, 0.0, "quadratic"),
        recipe.gaussian_ratio_check(101, 1.0, "complex"),
    ]


CHECKS = {
    "dbw": _check_dbw,
    "gauss": _check_gauss,
    "mellin": _check_mellin,
    "ramanujan": _check_ramanujan,
    "eisenstein": _check_eisenstein,
    "residue": _check_residue,
    "tripleroute": _check_tripleroute,
    "corollary": _check_corollary,
}

CORE_ORDER = ["dbw", "gauss", "mellin", "ramanujan", "eisenstein", "residue",
              "tripleroute", "corollary"]


def run_verify_suite(cfg: RunConfig) -> list[MomentReport]:
    names = CORE_ORDER if cfg.parameters.get("suite", "core") == "core" else [
        cfg.parameters["suite"]
    ]
    for n in names:
        if n not in CHECKS:
            raise ConfigError(f"unknown check {n!r}; known: {sorted(CHECKS)}")
    delta = float(cfg.parameters.get("perturb", 0.0))
    if delta:
        special.set_kernel_perturbation(delta)
    try:
        if cfg.thread_count > 1:
            with ThreadPoolExecutor(max_workers=cfg.thread_count) as pool:
                futures = {n: pool.submit(CHECKS[n], cfg) for n in names}
                results = {n: f.result() for n, f in futures.items()}
        else:
            results = {n: CHECKS[n](cfg) for n in names}
    finally:
        if delta:
            special.set_kernel_perturbation(0.0)
    out: list[MomentReport] = []
    for n in names:  # merge in declared order
        out.extend(results[n])
    return out


# -- sweeps --------------------------------------------------------------------------


def run_sweep(cfg: RunConfig) -> list[dict]:
    kind = cfg.parameters.get("kind", "predict")
    Ns = [int(x) for x in str(cfg.parameters.get("N", "101,211,401")).split(",")]
    rows = []
    if kind == "predict":
        T = float(cfg.parameters.get("T", 0.0))
        ckind = cfg.parameters.get("chikind", cfg.parameters.get("char_kind", "complex"))
        for N in Ns:
            rows.append({"N": N, "prediction": recipe.main_prediction(N, T, ckind)})
    elif kind == "threshold":
        N = Ns[0]
        sched = cfg.parameters.get("schedule", "auto")
        Ts = recipe.auto_schedule(N) if sched == "auto" else [float(x) for x in sched.split(",")]
        rows = recipe.threshold_scan(N, Ts)
    elif kind == "moment":
        Y = float(cfg.parameters.get("Y", 2.0))
        rep = moment.truncation_gap_report(Ns, Y)
        rows = rep["rows"]
        rows.append({"offset_fit": rep["offset_fit"], "fit_stderr": rep["fit_stderr"],
                     "monotone_decay": rep["monotone_decay"]})
    else:
        raise ConfigError(f"unknown sweep kind {kind!r}")
    return rows


# -- argument parsing ---------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config",
                        help="flat key = value config file with [verify]/[sweep] sections")
    common.add_argument("--format", choices=("text", "json", "csv"), default=None)
    common.add_argument("--threads", type=int, default=None)
    common.add_argument("--seed", type=int, default=None)

    p = argparse.ArgumentParser(prog="eisenlab", description=__doc__, parents=[common])
    sub = p.add_subparsers(dest="command", required=True)

    def add(parent, name, **kw):
        return parent.add_parser(name, parents=[common], **kw)

    v = add(sub, "verify", help="run identity checks")
    v.add_argument("check", nargs="?", default=None,
                   help="one of %s or 'core'" % ",".join(sorted(CHECKS)))
    v.add_argument("--suite", default=None)
    v.add_argument("--T", type=float, default=None, help="for 'verify dbw'")
    v.add_argument("--perturb", type=float, default=0.0,
                   help="inject a relative kernel fault (suite sensitivity self-test)")

    s = add(sub, "sweep", help="N- or T-sweeps of predictors and pipelines")
    s.add_argument("--kind", choices=("predict", "threshold", "moment"), default="predict")
    s.add_argument("--N", default="101,211,401")
    s.add_argument("--T", type=float, default=0.0)
    s.add_argument("--Y", type=float, default=2.0)
    s.add_argument("--schedule", default="auto")
    s.add_argument("--out", default=None, help="write csv/json to a file")

    r = add(sub, "recipe", help="shifted-moment engine")
    rsub = r.add_subparsers(dest="subcommand", required=True)
    re_ = add(rsub, "evaluate")
    re_.add_argument("--N", type=int, required=True)
    re_.add_argument("--char", required=True)
    re_.add_argument("--T", type=float, default=0.0)
    re_.add_argument("--eta", type=float, default=1e-2)
    re_.add_argument("--etap", type=float, default=1e-3)
    rt = add(rsub, "threshold")
    rt.add_argument("--N", type=int, required=True)
    rt.add_argument("--schedule", default="auto")
    rp = add(rsub, "predict")
    rp.add_argument("--N", type=int, required=True)
    rp.add_argument("--kind", choices=("quadratic", "complex"), required=True)
    rp.add_argument("--T", type=float, default=0.0)

    m = add(sub, "moment", help="truncated-moment pipeline")
    msub = m.add_subparsers(dest="subcommand", required=True)
    mp_ = add(msub, "pipeline")
    mp_.add_argument("--N", type=int, required=True)
    mp_.add_argument("--Y", type=float, default=2.0)
    mp_.add_argument("--routes", default="all")
    ms = add(msub, "sweep")
    ms.add_argument("--N", required=True)
    ms.add_argument("--Y", type=float, default=2.0)
    ms.add_argument("--out", default=None)

    e = add(sub, "eis", help="Eisenstein evaluation")
    esub = e.add_subparsers(dest="subcommand", required=True)
    ee = add(esub, "eval")
    ee.add_argument("--N", type=int, required=True)
    ee.add_argument("--char", required=True)
    ee.add_argument("--s", required=True, help="re,im")
    ee.add_argument("--z", required=True, help="x,y")
    ee.add_argument("--truncate", type=float, default=None)

    g = add(sub, "geom", help="coset geometry")
    gsub = g.add_subparsers(dest="subcommand", required=True)
    gv = add(gsub, "volume")
    gv.add_argument("--N", type=int, required=True)
    gc = add(gsub, "check-cosets")
    gc.add_argument("--N", type=int, required=True)

    lv = add(sub, "lvalue", help="Dirichlet L-value")
    lv.add_argument("--char", required=True)
    lv.add_argument("--s", required=True, help="re,im")
    return p


def _parse_pair(text: str) -> complex:
    re_, im = (float(x) for x in text.split(","))
    return complex(re_, im)


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    file_cfg: dict[str, dict[str, str]] = {}
    if args.config:
        file_cfg = load_config_file(args.config)

    def pick(key: str, cli_val, section: str, default):
        if cli_val is not None:
            return cli_val
        for sec in (section, "global"):
            if key in file_cfg.get(sec, {}):
                return type(default)(file_cfg[sec][key])
        return default

    fmt = pick("format", args.format, args.command, "text")
    threads = int(pick("threads", args.threads,
                       args.command, int(os.environ.get("EISENLAB_THREADS", "1"))))
    seed = int(pick("seed", args.seed, args.command, DEFAULT_SEED))

    try:
        return _dispatch(args, fmt, threads, seed)
    except EisenlabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def _timestamp() -> str:
    return time.strftime("%Y-%m-%dT%H:%M:%S")


def _emit_reports(reports: list[MomentReport], fmt: str) -> int:
    if fmt == "json":
        print(reports_to_json(reports, _timestamp()))
    elif fmt == "csv":
        print(reports_to_csv(reports), end="")
    else:
        print(reports_to_text(reports))
    return 0 if all(r.passed for r in reports) else 1


def _emit_rows(rows: list[dict], fmt: str, out: str | None = None) -> int:
    import csv as _csv
    import io
    import json as _json

    if fmt == "json":
        text = _json.dumps({"schema": 1, "timestamp": _timestamp(), "rows": rows},
                           indent=2, sort_keys=True, default=str)
    elif fmt == "csv":
        keys: list[str] = []
        for r in rows:
            for k in r:
                if k not in keys:
                    keys.append(k)
        buf = io.StringIO()
        w = _csv.DictWriter(buf, fieldnames=keys)
        w.writeheader()
        for r in rows:
            w.writerow({k: r.get(k, "") for k in keys})
        text = buf.getvalue()
    else:
        text = "\n".join(str(r) for r in rows)
    if out:
        with open(out, "w") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")
    else:
        print(text)
    return 0


def _dispatch(args, fmt: str, threads: int, seed: int) -> int:
    if args.command == "verify":
        suite = args.suite or args.check or "core"
        params = {"suite": suite, "perturb": args.perturb}
        if suite == "dbw" and args.T is not None:
            v = special.dbw_integral(args.T)
            rep = make_report(f"dbw T={args.T}", v, 8 * math.pi**3, 1e-7, policy="abs")
            return _emit_reports([rep], fmt)
        cfg = RunConfig("verify", params, fmt, threads, seed)
        return _emit_reports(run_verify_suite(cfg), fmt)

    if args.command == "sweep":
        cfg = RunConfig("sweep", {"kind": args.kind, "N": args.N, "T": args.T,
                                  "Y": args.Y, "schedule": args.schedule},
                        fmt, threads, seed)
        return _emit_rows(run_sweep(cfg), fmt, args.out)

    if args.command == "recipe":
        if args.subcommand == "predict":
            val = recipe.main_prediction(args.N, args.T, args.kind)
            return _emit_rows([{"N": args.N, "T": args.T, "kind": args.kind,
                                "prediction": val}], fmt)
        if args.subcommand == "threshold":
            Ts = recipe.auto_schedule(args.N) if args.schedule == "auto" else [
                float(x) for x in args.schedule.split(",")]
            return _emit_rows(recipe.threshold_scan(args.N, Ts), fmt)
        chi = character_by_address(args.char)
        if chi.modulus != args.N:
            raise ConfigError("character modulus must match --N")
        terms = recipe.evaluate_limit_path(args.N, args.T, chi, args.eta, args.etap)
        tot, pole = recipe.limit_path_total(terms)
        rows = []
        for (e3, e4), t in sorted(terms.items()):
            rows.append({"eps3": e3, "eps4": e4, "case": t.case_label,
                         "pole_residual": t.pole_residual,
                         "c_minus1": str(t.leading_coefficients.coefficient(-1)
                                         if t.leading_coefficients.order_of_pole else 0),
                         "c0": str(t.leading_coefficients.coefficient(0))})
        rows.append({"finite_total": str(tot), "pole_sum": str(pole),
                     "reference_main": recipe.main_prediction(
                         args.N, args.T, "quadratic" if chi.is_real else "complex")})
        return _emit_rows(rows, fmt)

    if args.command == "moment":
        Ns = [int(x) for x in str(args.N).split(",")]
        if args.subcommand == "pipeline":
            ctx = moment.PipelineContext(Ns[0], quadratic_character(Ns[0]), args.Y)
            wanted = ("quadrature", "coefficient_sum", "contour") if args.routes == "all" \
                else tuple(args.routes.split(","))
            rows = []
            for r in wanted:
                t0 = time.time()
                val = moment.cuspzone_integral(ctx, r)
                rows.append({"N": Ns[0], "Y": args.Y, "route": r,
                             "value_re": val.real, "value_im": val.imag,
                             "err_bound": "", "runtime_ms": 1000 * (time.time() - t0)})
            return _emit_rows(rows, fmt)
        rep = moment.truncation_gap_report(Ns, args.Y)
        rows = []
        for r in rep["rows"]:
            rows.append({"N": r["N"], "Y": r["Y"], "route": "coefficient_sum",
                         "value_re": r["cleaned"], "value_im": 0.0,
                         "err_bound": "", "runtime_ms": r["runtime_ms"]})
        return _emit_rows(rows, fmt, args.out)

    if args.command == "eis":
        chi2 = character_by_address(args.char)
        triv = characters.enumerate_characters(1)[0]
        if chi2.modulus != args.N:
            raise ConfigError("character modulus must match --N for the (1, chi) pair")
        model = eisenstein.EisensteinModel(triv, chi2, _parse_pair(args.s))
        z = _parse_pair(args.z)
        if args.truncate is not None:
            val = eisenstein.truncated_value(model, z, args.truncate)
        elif abs(model.s - 0.5) < 1e-12:
            val = eisenstein.evaluate_auto(model, z)
        else:
            val = eisenstein.evaluate(model, z)
        return _emit_rows([{"N": args.N, "s": str(model.s), "z": str(z),
                            "value_re": val.real, "value_im": val.imag}], fmt)

    if args.command == "geom":
        if args.subcommand == "volume":
            return _emit_rows([{"N": args.N, "volume": geometry.volume(args.N),
                                "nu": level_data(args.N).nu}], fmt)
        cl = geometry.coset_reps(args.N)
        ok = len(cl) == level_data(args.N).nu
        rep = make_report(f"coset count N={args.N}", len(cl), level_data(args.N).nu,
                          0.5, policy="abs")
        return _emit_reports([rep], fmt)

    if args.command == "lvalue":
        chi = character_by_address(args.char)
        s = _parse_pair(args.s)
        val = lfunctions.dirichlet_l(s, chi)
        return _emit_rows([{"char": args.char, "s": str(s), "value_re": val.real,
                            "value_im": val.imag, "method": "hurwitz-euler-maclaurin",
                            "error_bound": 1e-10}], fmt)

    raise ConfigError(f"unhandled command {args.command}")


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
