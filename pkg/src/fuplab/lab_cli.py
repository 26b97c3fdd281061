r"""Command-line front door for the numerical laboratory.

Subcommands cover the verification suites (algebra-verify, hessian-check),
flow tracing, group factorization, the porosity deciders on cubes and on
spheres, the decay experiments (fup-scan, fio-sphere), and exact word
counting (words-count).

Conventions shared by every command:

* ``--out`` directory collects all produced files; every run writes a JSON
  manifest listing the resolved configuration, the seed, digests of the
  inputs, and the output files, so a run can be reproduced byte-for-byte.
* numeric output is serialized with 17 significant digits;
* exit codes: 0 pass, 1 usage/configuration error, 2 counterexample or
  failed check, 3 inconclusive.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import hashlib
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .lorentz_core import (
    DecompositionError,
    GroupElement,
    LorentzError,
    exp_flow,
    generator,
    geodesic_flow,
    kan_decompose,
    normalizer_decompose,
    parse_label,
    random_group_element,
    read_group_element,
    write_group_element,
)
from .porosity import (
    BoxSet,
    CantorSpec,
    Verdict,
    ball_porosity_check,
    cantor_generate,
    line_porosity_check,
)
from .fup_numerics import (
    FupConfig,
    SphereAtlas,
    beta_fit,
    fup_experiment,
    log_phase_hessian_factors,
    mixed_hessian_det,
    sphere_porosity_check,
)
from .word_combinatorics import bound_check

VERDICT_EXIT = {Verdict.CERTIFIED: 0, Verdict.COUNTEREXAMPLE: 2, Verdict.INCONCLUSIVE: 3}


def _seed(args) -> int:
    return 0 if args.seed is None else int(args.seed)


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.17g}"
    if x is None:
        return ""
    return str(x)


def _sha256(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_manifest(out_dir: str, name: str, command: list[str], config: dict,
                   seed: int, inputs: list[str], outputs: list[str],
                   started: str, finished: str) -> str:
    payload = {
        "tool": "fuplab",
        "version": __version__,
        "command": command,
        "config": config,
        "seed": seed,
        "started": started,
        "finished": finished,
        "inputs": {p: _sha256(p) for p in inputs},
        "outputs": outputs,
    }
    path = os.path.join(out_dir, name)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def rerun_manifest(manifest_path: str, out_dir: str) -> int:
    """Re-execute the command recorded in a manifest into a fresh directory."""
    with open(manifest_path) as fh:
        payload = json.load(fh)
    argv = list(payload["command"])
    cleaned = []
    skip = False
    for tok in argv:
        if skip:
            skip = False
            continue
        if tok == "--out":
            skip = True
            continue
        cleaned.append(tok)
    # global flags precede the subcommand
    return main(["--out", out_dir] + cleaned)


def _now() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat()


def _write_csv(path: str, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _append_fit_footer(path: str, fits: dict) -> None:
    with open(path, "a", newline="") as fh:
        for key, fit in fits.items():
            tag = "" if key is None else f" w={_fmt(key)}"
            fh.write(f"# fit{tag} beta={_fmt(fit.beta)} intercept={_fmt(fit.intercept)} "
                     f"residual={_fmt(fit.residual)}\n")


def set_from_spec(spec: dict) -> BoxSet:
    """Structured-text set declaration: a Cantor family or explicit boxes."""
    if "cantor" in spec:
        c = spec["cantor"]
        n = int(c.get("dims", 1))
        cs = CantorSpec.uniform(int(c["base"]), tuple(int(d) for d in c["kept_digits"]),
                                int(c["depth"]), n)
        return cantor_generate(cs, n)
    if "boxes" in spec:
        if "dims" in spec:
            n = int(spec["dims"])
        elif spec["boxes"]:
            n = len(spec["boxes"][0][0])
        else:
            raise ValueError("empty box list needs an explicit 'dims' field")
        m = int(spec["resolution"])
        return BoxSet.from_boxes([(b[0], b[1]) for b in spec["boxes"]], m, n)
    raise ValueError("set spec must declare 'cantor' or 'boxes'")


def load_set_spec(path: str) -> BoxSet:
    with open(path) as fh:
        return set_from_spec(json.load(fh))


# ---------------------------------------------------------------------------
# algebra-verify


def _commutator_table_exact(n: int, flip_sign: bool = False) -> list[str]:
    """Names of failed relations of the frame bracket table (exact ints)."""
    from .lorentz_core import bracket

    x = generator("X", n=n, dtype=object)
    u = {(i, s): generator("U" + s, i, n=n, dtype=object)
         for i in range(1, n + 1) for s in "+-"}
    failures = []

    def expect(y, z, target, name):
        got = bracket(y, z).matrix
        if not np.array_equal(got, target):
            failures.append(name)

    for i in range(1, n + 1):
        up = u[(i, "+")].matrix * (-1 if flip_sign else 1)
        expect(x, u[(i, "+")], up, f"[X,U{i}+]=U{i}+")
        expect(x, u[(i, "-")], -(u[(i, "-")].matrix * 1), f"[X,U{i}-]=-U{i}-")
        expect(u[(i, "+")], u[(i, "-")], 2 * x.matrix, f"[U{i}+,U{i}-]=2X")
        for j in range(1, n + 1):
            if i == j:
                continue
            zero = np.zeros((n + 2, n + 2), dtype=object)
            expect(u[(i, "+")], u[(j, "+")], zero, f"[U{i}+,U{j}+]=0")
            rij = generator("R", min(i, j) + 1, max(i, j) + 1, n=n, dtype=object).matrix * 1
            sign = 1 if i < j else -1
            expect(u[(i, "+")], u[(j, "-")], 2 * sign * rij, f"[U{i}+,U{j}-]=2R")
    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            r = generator("R", i + 1, j + 1, n=n, dtype=object)
            expect(r, x, np.zeros((n + 2, n + 2), dtype=object), f"[R{i+1}{j+1},X]=0")
            for k in range(1, n + 1):
                for s in "+-":
                    target = np.zeros((n + 2, n + 2), dtype=object)
                    if j == k:
                        target = u[(i, s)].matrix * 1
                    elif i == k:
                        target = -(u[(j, s)].matrix * 1)
                    expect(r, u[(k, s)], target, f"[R{i+1}{j+1},U{k}{s}]")
    return failures


def _flow_compat_suite(n: int, rng: np.random.Generator, trials: int = 100) -> float:
    x_gen = generator("X", n=n)
    worst = 0.0
    for _ in range(trials):
        g = random_group_element(rng, n)
        t = float(rng.uniform(-5.0, 5.0))
        gt = g @ exp_flow(x_gen, t)
        x, xi = geodesic_flow(g.matrix[:, 0], g.matrix[:, 1], t)
        worst = max(worst, float(np.max(np.abs(x - gt.matrix[:, 0]))),
                    float(np.max(np.abs(xi - gt.matrix[:, 1]))))
    return worst


def _horocyclic_suite(n: int, rng: np.random.Generator, trials: int = 100) -> float:
    x_gen = generator("X", n=n)
    worst = 0.0
    for _ in range(trials):
        i = int(rng.integers(1, n + 1))
        s = float(rng.uniform(-1.0, 1.0))
        t = float(rng.uniform(-3.0, 3.0))
        for sign, kind in ((1, "U+"), (-1, "U-")):
            u_gen = generator(kind, i, n=n)
            lhs = exp_flow(u_gen, s) @ exp_flow(x_gen, -t)
            rhs = exp_flow(x_gen, -t) @ exp_flow(u_gen, s * math.exp(sign * t))
            worst = max(worst, float(np.max(np.abs(lhs.matrix - rhs.matrix))))
    return worst


def cmd_algebra_verify(args) -> int:
    rng = np.random.default_rng(_seed(args))
    status = 0
    for n in range(args.n_min, args.n_max + 1):
        failures = _commutator_table_exact(n, flip_sign=args.inject_sign_flip)
        if failures:
            print(f"n={n} commutator-table FAIL: {failures[0]}")
            status = 2
        else:
            print(f"n={n} commutator-table pass (exact)")
        flow_err = _flow_compat_suite(n, rng)
        print(f"n={n} flow-compatibility {'pass' if flow_err <= 1e-9 else 'FAIL'} "
              f"(worst {_fmt(flow_err)})")
        status = status or (0 if flow_err <= 1e-9 else 2)
        horo_err = _horocyclic_suite(n, rng)
        print(f"n={n} horocyclic-commutation {'pass' if horo_err <= 1e-8 else 'FAIL'} "
              f"(worst {_fmt(horo_err)})")
        status = status or (0 if horo_err <= 1e-8 else 2)
    return status


# ---------------------------------------------------------------------------
# flow-trace / group-decompose


def cmd_flow_trace(args) -> int:
    started = _now()
    if args.frame:
        q = read_group_element(args.frame, args.tol)
        n = q.n
        inputs = [args.frame]
    else:
        n = args.n
        q = GroupElement.identity(n)
        inputs = []
    gen = parse_label(args.generator, n)
    ts = np.linspace(args.t0, args.t1, args.steps)
    rows = []
    for t in ts:
        g = q @ exp_flow(gen, float(t))
        rows.append([t] + list(g.matrix[:, 0]) + list(g.matrix[:, 1]))
    header = ["t"] + [f"x{i}" for i in range(n + 2)] + [f"xi{i}" for i in range(n + 2)]
    out_csv = os.path.join(args.out, "flow_trace.csv")
    _write_csv(out_csv, header, rows)
    write_manifest(args.out, "flow_trace.manifest.json", args.command,
                   dict(n=n, generator=args.generator, t0=args.t0, t1=args.t1,
                        steps=args.steps), _seed(args), inputs, [out_csv], started, _now())
    print(f"wrote {out_csv}")
    return 0


def cmd_group_decompose(args) -> int:
    try:
        g = read_group_element(args.input, args.tol)
    except (OSError, LorentzError) as exc:
        print(f"error: {exc}")
        return 1
    try:
        if args.mode in ("kan+", "kan-"):
            sign = 1 if args.mode == "kan+" else -1
            fac = kan_decompose(g, sign, args.tol)
            err = float(np.max(np.abs(fac.product().matrix - g.matrix)))
            for tag, el in (("k", fac.k), ("a", fac.a), ("b", fac.b)):
                write_group_element(el, os.path.join(args.out, f"factor_{tag}.txt"))
            print(f"kan reconstruction error {_fmt(err)} t={_fmt(fac.t)} "
                  f"v={' '.join(_fmt(v) for v in fac.v)}")
            return 0 if err <= 100 * args.tol else 2
        w, k, kind = normalizer_decompose(g, args.l, args.tol)
        err = float(np.max(np.abs((w @ k).matrix - g.matrix)))
        write_group_element(w, os.path.join(args.out, "factor_w.txt"))
        write_group_element(k, os.path.join(args.out, "factor_k.txt"))
        print(f"normalizer decomposition kind={kind.value} error {_fmt(err)}")
        return 0 if err <= 100 * args.tol else 2
    except DecompositionError as exc:
        print(f"decomposition failed: {exc}")
        return 2


# ---------------------------------------------------------------------------
# porosity commands


def cmd_porosity_check(args) -> int:
    started = _now()
    try:
        x = load_set_spec(args.set)
        if args.mode == "ball":
            rep = ball_porosity_check(x, args.nu, args.alpha0, args.alpha1)
        else:
            rep = line_porosity_check(x, args.nu, args.alpha0, args.alpha1,
                                      args.directions)
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}")
        return 1
    out_path = os.path.join(args.out, "porosity_report.txt")
    with open(out_path, "w") as fh:
        fh.write(rep.to_text())
    write_manifest(args.out, "porosity_report.manifest.json", args.command,
                   dict(set=args.set, nu=args.nu, alpha0=args.alpha0,
                        alpha1=args.alpha1, mode=args.mode,
                        directions=args.directions), _seed(args), [args.set],
                   [out_path], started, _now())
    print(rep.to_text(), end="")
    return VERDICT_EXIT[rep.verdict]


def cmd_sphere_porosity(args) -> int:
    started = _now()
    try:
        with open(args.set) as fh:
            spec = json.load(fh)
        band = spec["band"]
        base = cantor_generate(
            CantorSpec.uniform(int(band["base"]),
                               tuple(int(d) for d in band["kept_digits"]),
                               int(band["depth"]), 1), 1)
        lo, hi = (float(v) for v in band["arc"])
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}")
        return 1

    def oracle(y):
        ang = (np.arctan2(y[:, 1], y[:, 0]) / (2 * np.pi)) % 1.0
        inside = (ang >= lo) & (ang < hi)
        frac = np.clip((ang - lo) / (hi - lo), 0.0, 1.0 - 1e-12)
        idx = (frac * base.m).astype(int)
        return inside & base.mask[idx]

    atlas = SphereAtlas.for_circle(args.charts)
    verdict, reports = sphere_porosity_check(oracle, args.nu, args.alpha0, args.alpha1,
                                             atlas, m=args.resolution, kind=args.mode,
                                             directions=args.directions)
    out_path = os.path.join(args.out, "sphere_porosity.txt")
    with open(out_path, "w") as fh:
        fh.write(f"aggregate={verdict.value} charts={atlas.chart_count}\n")
        for k, rep in enumerate(reports):
            fh.write(f"# chart {k}\n")
            fh.write(rep.to_text())
    write_manifest(args.out, "sphere_porosity.manifest.json", args.command,
                   dict(set=args.set, nu=args.nu, alpha0=args.alpha0,
                        alpha1=args.alpha1, mode=args.mode, charts=args.charts,
                        resolution=args.resolution), _seed(args), [args.set],
                   [out_path], started, _now())
    print(f"aggregate={verdict.value}")
    return VERDICT_EXIT[verdict]


# ---------------------------------------------------------------------------
# decay experiments


def _config_from_json(path: str) -> tuple[FupConfig, dict]:
    with open(path) as fh:
        raw = json.load(fh)
    known = {f for f in FupConfig.__dataclass_fields__}
    bad = set(raw) - known
    if bad:
        raise ValueError(f"unknown config fields: {sorted(bad)}")
    parsed = dict(raw)
    if "ladder" in parsed:
        parsed["ladder"] = tuple(int(v) for v in parsed["ladder"])
    if "w_list" in parsed:
        parsed["w_list"] = tuple(float(v) for v in parsed["w_list"])
    if "cantor_kept" in parsed:
        parsed["cantor_kept"] = tuple(int(v) for v in parsed["cantor_kept"])
    for arc in ("arc_minus", "arc_plus"):
        if arc in parsed:
            parsed[arc] = tuple(float(v) for v in parsed[arc])
    for key in ("set_minus", "set_plus"):
        if parsed.get(key) is not None:
            parsed[key] = set_from_spec(parsed[key])
    cfg = FupConfig(**parsed)
    cfg.validate()
    return cfg, raw


def _experiment_rows(cfg: FupConfig, workers: int):
    if workers <= 1 or len(cfg.ladder) == 1:
        return fup_experiment(cfg)
    # dispatch one ladder point per task; aggregation is sorted by (w, N)
    import dataclasses

    points = []
    for N in cfg.ladder:
        sub = dataclasses.replace(cfg, ladder=(N,))
        points.append(sub)
    rows = []
    ok = True
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for sub_rows, _fits, sub_ok in pool.map(fup_experiment, points):
            rows.extend(sub_rows)
            ok = ok and sub_ok
    rows.sort(key=lambda r: (r["w"] if r["w"] is not None else -1.0, r["N"]))
    fits = {}
    for w in sorted({r["w"] for r in rows}, key=lambda v: (-1.0 if v is None else v)):
        samples = [(r["h"], r["norm"]) for r in rows if r["w"] == w]
        if len(samples) >= 4 and all(v > 0 for _, v in samples):
            fits[w] = beta_fit(samples)
    return rows, fits, ok


FUP_HEADER = ["core", "n", "N", "h", "rho", "norm", "iters", "converged"]


def cmd_fup_scan(args) -> int:
    started = _now()
    try:
        cfg, raw_cfg = _config_from_json(args.config)
    except (OSError, ValueError, TypeError) as exc:
        print(f"config error: {exc}")
        return 1
    if args.seed is not None:
        cfg.seed = args.seed
    rows, fits, ok = _experiment_rows(cfg, args.workers)
    out_csv = os.path.join(args.out, "fup_scan.csv")
    _write_csv(out_csv, FUP_HEADER,
               [[r["core"], r["n"], r["N"], r["h"], r["rho"], r["norm"], r["iters"],
                 r["converged"]] for r in rows])
    _append_fit_footer(out_csv, fits)
    write_manifest(args.out, "fup_scan.manifest.json", args.command, raw_cfg,
                   cfg.seed, [args.config], [out_csv], started, _now())
    for key, fit in fits.items():
        tag = "" if key is None else f" w={_fmt(key)}"
        print(f"fit{tag}: beta={_fmt(fit.beta)} residual={_fmt(fit.residual)}")
    print(f"sanity {'pass' if ok else 'FAIL'}; wrote {out_csv}")
    return 0 if ok else 2


def cmd_fio_sphere(args) -> int:
    started = _now()
    cfg = FupConfig(core="log_phase", n=1,
                    ladder=tuple(args.ladder), w_list=tuple(args.w),
                    rho=args.rho, seed=_seed(args))
    try:
        cfg.validate()
    except ValueError as exc:
        print(f"config error: {exc}")
        return 1
    rows, fits, ok = _experiment_rows(cfg, args.workers)
    out_csv = os.path.join(args.out, "fio_sphere.csv")
    _write_csv(out_csv, ["core", "n", "N", "h", "rho", "w", "norm", "iters", "converged"],
               [[r["core"], r["n"], r["N"], r["h"], r["rho"], r["w"], r["norm"],
                 r["iters"], r["converged"]] for r in rows])
    _append_fit_footer(out_csv, fits)
    import dataclasses
    write_manifest(args.out, "fio_sphere.manifest.json", args.command,
                   dataclasses.asdict(cfg), cfg.seed, [], [out_csv], started, _now())
    all_decay = all(fit.beta > 0 for fit in fits.values()) if fits else False
    for w, fit in fits.items():
        print(f"w={_fmt(w)}: beta={_fmt(fit.beta)} residual={_fmt(fit.residual)}")
    print(f"{'pass' if ok and all_decay else 'FAIL'}; wrote {out_csv}")
    return 0 if ok and all_decay else 2


# ---------------------------------------------------------------------------
# words-count / hessian-check


def cmd_words_count(args) -> int:
    started = _now()
    try:
        ladder = [float(args.base) ** (-j) for j in range(args.j_min, args.j_max + 1)]
        rows = bound_check(args.rho, args.alpha, ladder, args.slack)
    except ValueError as exc:
        print(f"error: {exc}")
        return 1
    out_csv = os.path.join(args.out, "words_count.csv")
    _write_csv(out_csv, ["alpha", "rho", "h", "T0", "count", "ratio", "logC"],
               [[r["alpha"], r["rho"], r["h"], r["T0"], r["count"], r["ratio"], r["logC"]]
                for r in rows])
    write_manifest(args.out, "words_count.manifest.json", args.command,
                   dict(alpha=args.alpha, rho=args.rho, j_min=args.j_min,
                        j_max=args.j_max, base=args.base, slack=args.slack),
                   _seed(args), [], [out_csv], started, _now())
    final = rows[-1]
    print(f"final ratio {_fmt(final['ratio'])} vs bound "
          f"{_fmt(4 * math.sqrt(args.alpha) + args.slack)}; wrote {out_csv}")
    return 0 if final["within"] else 2


def cmd_hessian_check(args) -> int:
    started = _now()
    rng = np.random.default_rng(_seed(args))
    rows = []
    worst = 0.0
    checked = 0
    while checked < args.pairs:
        a = rng.standard_normal(args.n + 1)
        a /= np.linalg.norm(a)
        b = rng.standard_normal(args.n + 1)
        b /= np.linalg.norm(b)
        if np.linalg.norm(a - b) < 0.1:
            continue
        w = float(rng.uniform(args.w_min, args.w_max))
        phi = lambda u, v: 2 * w * math.log(float(np.linalg.norm(u - v))) - w * math.log(4.0)
        fd = mixed_hessian_det(phi, a, b, args.fd_step)
        _, _, sym = log_phase_hessian_factors(w, a, b)
        rel = abs(fd - sym) / abs(sym)
        worst = max(worst, rel)
        rows.append([args.n, w, float(np.linalg.norm(a - b)), fd, sym, rel])
        checked += 1
    out_csv = os.path.join(args.out, "hessian_check.csv")
    _write_csv(out_csv, ["n", "w", "separation", "fd_det", "symbolic_det", "rel_err"], rows)
    write_manifest(args.out, "hessian_check.manifest.json", args.command,
                   dict(n=args.n, pairs=args.pairs, w_min=args.w_min, w_max=args.w_max,
                        fd_step=args.fd_step, rel_tol=args.rel_tol), _seed(args), [],
                   [out_csv], started, _now())
    print(f"worst relative error {_fmt(worst)} over {args.pairs} pairs; wrote {out_csv}")
    return 0 if worst <= args.rel_tol else 2


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fuplab",
                                     description="hyperbolic-flow and masked-transform laboratory")
    parser.add_argument("--seed", type=int, default=None, help="deterministic seed")
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--workers", type=int, default=1, help="parallel ladder workers")
    parser.add_argument("--tol", type=float, default=1e-10, help="certification tolerance")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("algebra-verify", help="bracket table, flow and commutation suites")
    p.add_argument("--n-min", type=int, default=2)
    p.add_argument("--n-max", type=int, default=4)
    p.add_argument("--inject-sign-flip", action="store_true",
                   help="negative control: corrupt one relation and expect failure")
    p.set_defaults(func=cmd_algebra_verify)

    p = sub.add_parser("flow-trace", help="trace a one-parameter flow from a frame")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--generator", default="X")
    p.add_argument("--frame", default=None, help="file with a stored group element")
    p.add_argument("--t0", type=float, default=0.0)
    p.add_argument("--t1", type=float, default=1.0)
    p.add_argument("--steps", type=int, default=11)
    p.set_defaults(func=cmd_flow_trace)

    p = sub.add_parser("group-decompose", help="KAN or normalizer factorization")
    p.add_argument("--input", required=True)
    p.add_argument("--mode", choices=["kan+", "kan-", "normalizer"], default="kan+")
    p.add_argument("--l", type=int, default=2)
    p.set_defaults(func=cmd_group_decompose)

    p = sub.add_parser("porosity-check", help="ball/line porosity decision for a set file")
    p.add_argument("--set", required=True)
    p.add_argument("--nu", type=float, required=True)
    p.add_argument("--alpha0", type=float, required=True)
    p.add_argument("--alpha1", type=float, required=True)
    p.add_argument("--mode", choices=["ball", "line"], default="ball")
    p.add_argument("--directions", type=int, default=8)
    p.set_defaults(func=cmd_porosity_check)

    p = sub.add_parser("sphere-porosity", help="chart-level porosity on the circle")
    p.add_argument("--set", required=True)
    p.add_argument("--nu", type=float, required=True)
    p.add_argument("--alpha0", type=float, required=True)
    p.add_argument("--alpha1", type=float, required=True)
    p.add_argument("--mode", choices=["ball", "line"], default="ball")
    p.add_argument("--charts", type=int, default=8)
    p.add_argument("--resolution", type=int, default=128)
    p.add_argument("--directions", type=int, default=8)
    p.set_defaults(func=cmd_sphere_porosity)

    p = sub.add_parser("fup-scan", help="masked-transform decay experiment from a config")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_fup_scan)

    p = sub.add_parser("fio-sphere", help="log-phase kernel decay sweep over energies")
    p.add_argument("--w", type=float, nargs="+", default=[0.125, 1.0, 8.0])
    p.add_argument("--ladder", type=int, nargs="+", default=[108, 324, 972, 2916])
    p.add_argument("--rho", type=float, default=None)
    p.set_defaults(func=cmd_fio_sphere)

    p = sub.add_parser("words-count", help="exact uncontrolled-word counting table")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--rho", type=float, required=True)
    p.add_argument("--j-min", type=int, required=True)
    p.add_argument("--j-max", type=int, required=True)
    p.add_argument("--base", type=float, default=2.0)
    p.add_argument("--slack", type=float, default=0.1)
    p.set_defaults(func=cmd_words_count)

    p = sub.add_parser("hessian-check", help="finite-difference vs symbolic phase Hessian")
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--pairs", type=int, default=100)
    p.add_argument("--w-min", type=float, default=0.25)
    p.add_argument("--w-max", type=float, default=4.0)
    p.add_argument("--fd-step", type=float, default=1e-5)
    p.add_argument("--rel-tol", type=float, default=1e-4)
    p.set_defaults(func=cmd_hessian_check)

    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0
    args.command = argv
    os.makedirs(args.out, exist_ok=True)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
