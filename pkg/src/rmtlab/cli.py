"""Batch frontend: reproducible sampling runs, spectral-statistics curves,
the symmetric-space classification printer, transport solvers and the
operator-mapping convergence check, all emitting plot-ready CSV.

Conventions shared by every subcommand:

  * output CSV starts with `#`-prefixed metadata lines (sorted by key),
    then a header row and data rows; a JSON manifest with the command,
    the full parameter map, the seed and SHA-256 digests of the outputs
    is written next to every output file, so a run can be reproduced and
    verified bit-for-bit (nothing time- or host-dependent is recorded);
  * all randomness flows from `--seed`; commands that consume randomness
    draw an OS-entropy seed when the flag is omitted (and record it),
    except under `--strict`, where omitting the seed is an error;
  * exit codes: 0 success, 1 internal error, 2 validation error;
  * worker counts come from the RMT_THREADS environment variable unless a
    `--workers` flag overrides it; results never depend on either.

An optional `--config file.json` mirrors the long flag names 1:1 (dashes
as underscores); explicit flags win over config values.
"""

import argparse
import hashlib
import json
import math
import os
import sys

import numpy as np

from . import __version__, lie
from .cartan import (CARTAN_CLASSES, catalog_lookup, catalog_rows,
                     jacobi_parameters, laguerre_parameter)
from .cs import CSModel, op_mapping_residual, root_value_couplings
from .cartan import RadialGridFunction
from .dmpk import (exact_beta2_transport_moments, mc_dmpk_evolve,
                   mc_transfer_product, mean_conductance)
from .ensembles import BETAS, EnsembleSpec, sample_spectra
from .roots import build_root_system
from .spectra import (number_variance, pair_correlation_mc, poisson_levels,
                      spacing_distribution, spectral_rigidity, unfold)
from .util import derive_seed

_ZERO_MODE_RTOL = 1e-10


class CliError(ValueError):
    pass


# ---------------------------------------------------------------------------
# deterministic serialization
# ---------------------------------------------------------------------------

def _fmt(x) -> str:
    """Shortest round-trip text for scalars (bit-identical across runs)."""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _csv_quote(text: str) -> str:
    if any(c in text for c in ',"\n'):
        return '"' + text.replace('"', '""') + '"'
    return text


def write_csv(path, meta: dict, header, rows):
    """`#` metadata lines (sorted), a header line, then the data rows."""
    lines = []
    for key in sorted(meta):
        value = meta[key]
        if not isinstance(value, str):
            value = _fmt(value)
        lines.append(f"# {key} = {value}")
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(_csv_quote(_fmt(cell)) for cell in row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_manifest(out_path, command: str, params: dict, seed):
    """RunManifest JSON next to the output: everything needed to reproduce
    the file bit-exactly, plus its digest to verify that it did."""
    manifest = {
        "command": command,
        "parameters": {k: params[k] for k in sorted(params)},
        "seed": seed,
        "version": __version__,
        "outputs": {os.path.basename(out_path): _sha256(out_path)},
    }
    path = str(out_path) + ".manifest.json"
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _public_params(args, exclude=("command", "config", "out", "strict",
                                  "seed", "func", "needs_seed")) -> dict:
    return {k: v for k, v in vars(args).items() if k not in exclude}


def _resolve_seed(args) -> int:
    """Honor --seed; draw and announce an OS-entropy seed otherwise."""
    if args.seed is not None:
        return args.seed
    if not args.needs_seed(args):
        return None
    if args.strict:
        raise CliError("--strict requires an explicit --seed for commands "
                       "that consume randomness")
    seed = int.from_bytes(os.urandom(8), "little") >> 1
    print(f"no --seed given; using OS-entropy seed {seed} "
          "(recorded in the manifest)", file=sys.stderr)
    return seed


def _float_list(text: str):
    try:
        values = [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated float list: "
                                         f"{text!r}")
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


# ---------------------------------------------------------------------------
# sample
# ---------------------------------------------------------------------------

def cmd_sample(args) -> int:
    seed = _resolve_seed(args)
    spec = EnsembleSpec(kind=args.kind, beta=args.beta, N=args.n,
                        p=args.p, q=args.q, v=args.v, seed=seed)
    if args.draws < 1:
        raise CliError("--draws must be >= 1")
    spectra = sample_spectra(spec, args.draws, workers=args.workers)
    rows = []
    for draw, spectrum in enumerate(spectra):
        levels = spectrum.levels
        scale = max(float(np.abs(levels).max()), 1e-300)
        for idx, level in enumerate(levels):
            is_zero = int(abs(level) < _ZERO_MODE_RTOL * scale)
            rows.append((draw, idx, float(level), is_zero))
    meta = {"kind": args.kind, "beta": args.beta, "v": args.v,
            "draws": args.draws, "seed": seed, "version": __version__,
            "degeneracy_stride": spectra[0].degeneracy_stride,
            "zero_mode_rtol": _ZERO_MODE_RTOL}
    if args.kind == "chiral":
        meta.update(p=args.p, q=args.q)
    else:
        meta.update(n=args.n)
    write_csv(args.out, meta, ("draw", "level_index", "level", "is_zero"),
              rows)
    write_manifest(args.out, "sample", _public_params(args), seed)
    return 0


def _read_sample_csv(path):
    """Levels per draw from a CSV as written by `sample`."""
    if not os.path.exists(path):
        raise CliError(f"input file not found: {path}")
    header = None
    by_draw = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            cells = line.split(",")
            if header is None:
                header = cells
                missing = {"draw", "level"} - set(header)
                if missing:
                    raise CliError(f"input schema mismatch: missing columns "
                                   f"{sorted(missing)} in {path}")
                i_draw, i_level = header.index("draw"), header.index("level")
                continue
            by_draw.setdefault(int(cells[i_draw]), []).append(
                float(cells[i_level]))
    if not by_draw:
        raise CliError(f"no data rows in {path}")
    return [np.sort(np.asarray(by_draw[k])) for k in sorted(by_draw)]


# ---------------------------------------------------------------------------
# stats
# ---------------------------------------------------------------------------

def cmd_stats(args) -> int:
    seed = _resolve_seed(args)
    if args.surrogate == "poisson":
        batch = [poisson_levels(args.n, seed, i) for i in range(args.draws)]
        source = "poisson surrogate"
    else:
        if args.infile is None:
            raise CliError("either --in or --surrogate poisson is required")
        batch = _read_sample_csv(args.infile)
        source = args.infile
    unfolded = [unfold(levels, degree=args.unfold_degree) for levels in batch]

    if args.observable == "ps":
        curve = spacing_distribution(unfolded, n_bins=args.bins,
                                     s_max=args.smax)
    elif args.observable in ("sigma2", "delta3"):
        grid = np.linspace(args.lmin, args.lmax, args.n_l)
        fn = number_variance if args.observable == "sigma2" \
            else spectral_rigidity
        curve = fn(unfolded, grid, n_windows=args.windows)
    else:  # y2
        curve = pair_correlation_mc(unfolded, r_max=args.rmax,
                                    n_bins=args.bins or 30)

    meta = {"observable": args.observable, "source": source,
            "n_spectra": len(batch), "unfold_degree": args.unfold_degree,
            "seed": seed, "version": __version__}
    for key, value in curve.meta.items():
        meta[f"curve_{key}"] = value if np.isscalar(value) \
            else json.dumps(value)
    rows = list(zip(curve.grid, curve.values, curve.stderr))
    write_csv(args.out, meta, ("x", "value", "stderr"), rows)
    write_manifest(args.out, "stats", _public_params(args), seed)
    return 0


# ---------------------------------------------------------------------------
# classify
# ---------------------------------------------------------------------------

def _classification_record(triplet) -> dict:
    plus, flat, minus = triplet
    entry = minus
    has_wall = entry.restricted_family in ("B", "C", "BC")
    record = {
        "class": entry.cartan_class,
        "compact_space": entry.compact_name,
        "noncompact_space": entry.noncompact_name,
        "family": f"{entry.restricted_family}{entry.rank}",
        "m_ordinary": entry.m_ordinary,
        "m_long": entry.m_long,
        "m_short": entry.m_short,
        "curvatures": "+1 0 -1",
        "tag_positive": plus.ensemble_tag,
        "tag_flat": flat.ensemble_tag,
        "tag_negative": minus.ensemble_tag,
        "rho": " ".join(_fmt(c) for c in entry.rho()),
    }
    if has_wall:
        lam = laguerre_parameter(entry)
        lam_j, sigma_j = jacobi_parameters(entry)
        record.update(laguerre_lambda=_fmt(lam), jacobi_lambda=_fmt(lam_j),
                      jacobi_sigma=_fmt(sigma_j))
    else:
        record.update(laguerre_lambda="", jacobi_lambda="", jacobi_sigma="")
    return record


def _classification_text(record) -> str:
    lines = [
        f"class {record['class']}: {record['family']} with multiplicities "
        f"(m_o, m_l, m_s) = ({record['m_ordinary']}, {record['m_long']}, "
        f"{record['m_short']})",
        f"  compact (+1):      {record['compact_space']}"
        + (f"   [{record['tag_positive']}]" if record['tag_positive'] else ""),
        f"  flat (0):          tangent space of {record['noncompact_space']}"
        + (f"   [{record['tag_flat']}]" if record['tag_flat'] else ""),
        f"  noncompact (-1):   {record['noncompact_space']}"
        + (f"   [{record['tag_negative']}]" if record['tag_negative'] else ""),
        f"  rho = ({record['rho'].replace(' ', ', ')})",
    ]
    if record["laguerre_lambda"] != "":
        lines.append(
            f"  Laguerre/Jacobi parameters: lambda = "
            f"{record['laguerre_lambda']}, sigma = {record['jacobi_sigma']}")
    return "\n".join(lines)


def cmd_classify(args) -> int:
    if args.all:
        triplets = catalog_rows(N=args.n, pq=(args.p, args.q))
    elif args.cls is not None:
        triplets = [catalog_lookup(args.cls, N=args.n, p=args.p, q=args.q)]
    else:
        raise CliError("one of --class or --all is required")
    records = [_classification_record(t) for t in triplets]

    if args.format == "csv":
        header = list(records[0])
        lines = [",".join(header)]
        for rec in records:
            lines.append(",".join(_csv_quote(str(rec[k])) for k in header))
        text = "\n".join(lines) + "\n"
    else:
        text = "\n\n".join(_classification_text(rec) for rec in records) + "\n"

    if args.out:
        meta = {"command": "classify", "version": __version__,
                "n": args.n, "p": args.p, "q": args.q}
        with open(args.out, "w") as fh:
            if args.format == "csv":
                for key in sorted(meta):
                    fh.write(f"# {key} = {_fmt(meta[key])}\n")
            fh.write(text)
        write_manifest(args.out, "classify", _public_params(args), None)
    else:
        sys.stdout.write(text)
    return 0


# ---------------------------------------------------------------------------
# dmpk
# ---------------------------------------------------------------------------

def _dmpk_point(method, n, beta, s, args, seed):
    """(<G/G0>, stderr) for one wire length by the requested route."""
    if method == "exact":
        moments = exact_beta2_transport_moments(n, s)
        return moments["g_mean"], 0.0
    if method == "sde":
        dt = args.dt if args.dt is not None else 5e-4 * s
        states = mc_dmpk_evolve(n, beta, s, args.walkers, dt, seed=seed,
                                workers=args.workers)
        return mean_conductance(states)
    n_slices = max(1, math.ceil(s / args.slice_ds))
    states = mc_transfer_product(n, n_slices, s / n_slices, seed=seed,
                                 n_samples=args.wires, workers=args.workers)
    return mean_conductance(states)


def cmd_dmpk(args) -> int:
    methods = [args.method]
    if args.compare:
        if args.compare == args.method:
            raise CliError("--compare must name a different method")
        methods.append(args.compare)
    for method in methods:
        if method == "exact":
            if args.beta != 2:
                raise CliError("the exact route exists for beta = 2 only "
                               f"(got beta = {args.beta})")
            if args.n > 2:
                raise CliError("the exact conductance quadrature is "
                               "implemented for n <= 2 (the closed-form "
                               "density itself goes up to n = 4)")
        if method == "slices" and args.beta != 2:
            raise CliError("transfer-matrix slices are defined for beta = 2 "
                           f"only (got beta = {args.beta})")
    if any(s <= 0 for s in args.s):
        raise CliError("every --s value must be positive")
    seed = _resolve_seed(args)

    results = {}
    rows = []
    for im, method in enumerate(methods):
        for k, s in enumerate(args.s):
            sub_seed = None if seed is None \
                else derive_seed(seed, im * 10000 + k)
            g, err = _dmpk_point(method, args.n, args.beta, s, args, sub_seed)
            results[(method, s)] = (g, err)
            rows.append((s, method, g, err))

    meta = {"n": args.n, "beta": args.beta, "seed": seed,
            "version": __version__, "methods": " ".join(methods)}
    verdicts = []
    if args.compare:
        for k, s in enumerate(args.s):
            g1, e1 = results[(args.method, s)]
            g2, e2 = results[(args.compare, s)]
            band = 3.0 * math.hypot(e1, e2)
            ok = abs(g1 - g2) <= band
            verdicts.append(ok)
            line = (f"s={_fmt(s)}: {args.method} {g1:.6f}+-{e1:.6f} vs "
                    f"{args.compare} {g2:.6f}+-{e2:.6f}; |diff|={abs(g1-g2):.6f}"
                    f" {'<=' if ok else '>'} {band:.6f} -> "
                    f"{'agree' if ok else 'DISAGREE'} (3 combined sigma)")
            meta[f"agreement_{k}"] = line
            print(line)
    write_csv(args.out, meta, ("s", "method", "g_mean", "g_stderr"), rows)
    write_manifest(args.out, "dmpk", _public_params(args), seed)
    if args.compare and not all(verdicts):
        print("comparison failed: methods disagree beyond 3 combined sigma",
              file=sys.stderr)
        return 1
    return 0


# ---------------------------------------------------------------------------
# cs-check
# ---------------------------------------------------------------------------

def _bump_grid(center, h, n_points, width):
    axes = tuple(c + h * np.arange(-(n_points // 2), n_points // 2 + 1)
                 for c in center)
    Q = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    values = np.exp(-width * np.sum((Q - np.array(center)) ** 2, axis=-1))
    return RadialGridFunction(axes, values)


def cmd_cs_check(args) -> int:
    rs = build_root_system(args.family, args.rank, m_ordinary=args.m_ordinary,
                           m_long=args.m_long, m_short=args.m_short)
    couplings = root_value_couplings(rs)
    model = CSModel(rs, args.potential, couplings)
    if args.center is not None:
        center = args.center
        if len(center) != rs.dim:
            raise CliError(f"--center needs {rs.dim} coordinates for "
                           f"{args.family}{args.rank}")
    else:
        center = list(0.5 + 0.3 * np.arange(rs.dim, 0, -1))
    hs = sorted(args.h_values, reverse=True)
    residuals = [op_mapping_residual(model, _bump_grid(center, h,
                                                       args.grid_points,
                                                       args.width))
                 for h in hs]
    rows = list(zip(hs, residuals))
    meta = {"family": args.family, "rank": args.rank,
            "m_ordinary": args.m_ordinary, "m_long": args.m_long,
            "m_short": args.m_short, "potential": args.potential,
            "couplings": json.dumps({k: couplings[k]
                                     for k in sorted(couplings)}),
            "center": " ".join(_fmt(c) for c in center),
            "grid_points": args.grid_points, "width": args.width,
            "version": __version__}
    if len(hs) >= 2:
        slope = float(np.polyfit(np.log(hs), np.log(residuals), 1)[0])
        meta["fitted_order"] = slope
        print(f"residual order in h: {slope:.3f} (expect 2)")
    write_csv(args.out, meta, ("h", "residual"), rows)
    write_manifest(args.out, "cs-check", _public_params(args), None)
    return 0


# ---------------------------------------------------------------------------
# lie-fixtures
# ---------------------------------------------------------------------------

def _lie_fixture_results():
    """(name, max deviation) for the small-algebra Killing-form fixtures."""
    checks = []

    def against(name, algebra, expected):
        g = lie.killing_form(algebra)
        checks.append((name, float(np.abs(g - expected).max())))
        return g

    against("so3_killing_minus_half_identity", lie.so3(),
            -0.5 * np.eye(3))
    against("so3_normalized_killing_minus_identity", lie.so3_normalized(),
            -np.eye(3))
    g = against("so21_killing_lorentz", lie.so21(), np.diag([1.0, 1.0, -1.0]))
    checks.append(("so21_signature_2_1_0",
                   0.0 if lie.signature(g) == (2, 1, 0) else 1.0))
    g = against("e2_killing_degenerate", lie.euclidean_e2(),
                np.diag([-1.0, 0.0, 0.0]))
    checks.append(("e2_signature_0_1_2",
                   0.0 if lie.signature(g) == (0, 1, 2) else 1.0))
    against("su2_ladder_killing", lie.su2_ladder_basis(),
            np.array([[1.0, 0, 0], [0, 0, 1.0], [0, 1.0, 0]]))
    checks.append(("so3_compact_type",
                   0.0 if lie.is_compact_type(lie.so3()) else 1.0))
    checks.append(("so21_noncompact_type",
                   0.0 if not lie.is_compact_type(lie.so21()) else 1.0))
    return checks


def cmd_lie_fixtures(args) -> int:
    tol = 1e-12
    failures = 0
    for name, deviation in _lie_fixture_results():
        ok = deviation <= tol
        failures += not ok
        print(f"{'PASS' if ok else 'FAIL'} {name} (max deviation "
              f"{deviation:.2e}, tolerance {tol:.0e})")
    print(f"{'all fixtures pass' if failures == 0 else f'{failures} fixture(s) FAILED'}")
    return 0 if failures == 0 else 1


# ---------------------------------------------------------------------------
# parser plumbing
# ---------------------------------------------------------------------------

def _never(args) -> bool:
    return False


def build_parser():
    parser = argparse.ArgumentParser(
        prog="rmtlab",
        description="random-matrix / symmetric-space numerical laboratory")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    registry = {}

    def add(name, func, needs_seed=_never, **kwargs):
        sp = sub.add_parser(name, **kwargs)
        sp.set_defaults(func=func, needs_seed=needs_seed)
        sp.add_argument("--config", help="JSON file mirroring the long flag "
                                         "names; explicit flags win")
        sp.add_argument("--seed", type=int, help="base seed; all randomness "
                                                 "derives from it")
        sp.add_argument("--strict", action="store_true",
                        help="refuse to run randomized commands without "
                             "--seed")
        registry[name] = sp
        return sp

    sp = add("sample", cmd_sample, needs_seed=lambda a: True,
             help="draw ensemble spectra to CSV")
    sp.add_argument("--kind", required=True,
                    choices=("gaussian", "circular", "chiral"))
    sp.add_argument("--beta", required=True, type=int, choices=BETAS)
    sp.add_argument("--n", type=int, help="matrix size (gaussian/circular)")
    sp.add_argument("--p", type=int, help="chiral block height")
    sp.add_argument("--q", type=int, help="chiral block width")
    sp.add_argument("--v", type=float, default=1.0,
                    help="level scale parameter")
    sp.add_argument("--draws", type=int, default=1)
    sp.add_argument("--workers", type=int, default=None,
                    help="parallel draws (default: RMT_THREADS or 1)")
    sp.add_argument("--out", required=True)

    sp = add("stats", cmd_stats,
             needs_seed=lambda a: a.surrogate is not None,
             help="spectral-observable curve from sampled spectra")
    sp.add_argument("--in", dest="infile", help="CSV written by `sample`")
    sp.add_argument("--observable", required=True,
                    choices=("ps", "sigma2", "delta3", "y2"))
    sp.add_argument("--surrogate", choices=("poisson",),
                    help="generate surrogate spectra instead of reading "
                         "--in")
    sp.add_argument("--n", type=int, default=500,
                    help="levels per surrogate spectrum")
    sp.add_argument("--draws", type=int, default=20,
                    help="surrogate spectra to generate")
    sp.add_argument("--unfold-degree", type=int, default=7)
    sp.add_argument("--bins", type=int, default=None)
    sp.add_argument("--smax", type=float, default=None,
                    help="upper edge of the spacing histogram")
    sp.add_argument("--lmin", type=float, default=1.0)
    sp.add_argument("--lmax", type=float, default=10.0)
    sp.add_argument("--n-l", type=int, default=10,
                    help="number of window lengths between lmin and lmax")
    sp.add_argument("--windows", type=int, default=32,
                    help="counting windows per spectrum")
    sp.add_argument("--rmax", type=float, default=3.0,
                    help="largest separation for y2")
    sp.add_argument("--out", required=True)

    sp = add("classify", cmd_classify,
             help="symmetric-space triplet classification table")
    sp.add_argument("--class", dest="cls", help="one Cartan class, e.g. "
                    f"{', '.join(CARTAN_CLASSES[:4])}, ...")
    sp.add_argument("--all", action="store_true",
                    help="print all twelve catalog rows")
    sp.add_argument("--n", type=int, default=4, help="size parameter")
    sp.add_argument("--p", type=int, default=5, help="split parameter p")
    sp.add_argument("--q", type=int, default=3, help="split parameter q")
    sp.add_argument("--format", choices=("text", "csv"), default="text")
    sp.add_argument("--out", default=None, help="write here instead of "
                                                "stdout")

    sp = add("dmpk", cmd_dmpk,
             needs_seed=lambda a: "sde" in (a.method, a.compare)
             or "slices" in (a.method, a.compare),
             help="wire conductance vs length by exact quadrature, SDE "
                  "walkers or slice products")
    sp.add_argument("--n", required=True, type=int, help="channel count")
    sp.add_argument("--beta", required=True, type=int, choices=BETAS)
    sp.add_argument("--s", required=True, type=_float_list,
                    help="comma-separated wire lengths (units of mean free "
                         "path over channels)")
    sp.add_argument("--method", required=True,
                    choices=("exact", "sde", "slices"))
    sp.add_argument("--compare", choices=("exact", "sde", "slices"),
                    help="also run this method and print agreement verdicts")
    sp.add_argument("--walkers", type=int, default=2000)
    sp.add_argument("--dt", type=float, default=None,
                    help="SDE step (default: s/2000)")
    sp.add_argument("--wires", type=int, default=500,
                    help="independent slice-product wires")
    sp.add_argument("--slice-ds", type=float, default=2e-3,
                    help="target thickness of one slice")
    sp.add_argument("--workers", type=int, default=None)
    sp.add_argument("--out", required=True)

    sp = add("cs-check", cmd_cs_check,
             help="operator-mapping residual vs grid spacing")
    sp.add_argument("--family", required=True,
                    choices=("A", "B", "C", "D", "BC"))
    sp.add_argument("--rank", required=True, type=int)
    sp.add_argument("--m-ordinary", type=int, default=0)
    sp.add_argument("--m-long", type=int, default=0)
    sp.add_argument("--m-short", type=int, default=0)
    sp.add_argument("--potential", default="hyperbolic",
                    choices=("inverse_square", "hyperbolic", "trigonometric"))
    sp.add_argument("--h-values", type=_float_list,
                    default=[4e-3, 2e-3, 1e-3],
                    help="comma-separated grid spacings")
    sp.add_argument("--center", type=_float_list, default=None,
                    help="chamber point the test bump sits on")
    sp.add_argument("--grid-points", type=int, default=9)
    sp.add_argument("--width", type=float, default=40.0)
    sp.add_argument("--out", required=True)

    add("lie-fixtures", cmd_lie_fixtures,
        help="run the small-algebra Killing-form fixtures and print "
             "pass/fail")

    return parser, registry


def _apply_config(parser, registry, argv, args):
    with open(args.config) as fh:
        config = json.load(fh)
    if not isinstance(config, dict):
        raise CliError("config file must hold a JSON object of flag values")
    sp = registry[args.command]
    valid = {action.dest for action in sp._actions}
    unknown = set(config) - valid
    if unknown:
        raise CliError(f"config keys {sorted(unknown)} are not flags of "
                       f"`{args.command}`")
    sp.set_defaults(**config)
    return parser.parse_args(argv)


def main(argv=None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    parser, registry = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "config", None):
            args = _apply_config(parser, registry, argv, args)
        return args.func(args)
    except SystemExit as exc:  # argparse validation/help paths
        return int(exc.code or 0)
    except ValueError as exc:  # domain/validation errors from any module
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - internal failure path
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
