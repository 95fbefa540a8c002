"""Command-line front end.

Every subcommand prints one JSON object (or a CSV grid) to stdout. Exit
codes: 0 success, 1 usage or malformed input, 2 domain errors (infeasible
alpha, non-stochastic model, ...), reported as a structured error object.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

from . import __version__, rng
from .dist import FiniteDist, mean_f, tilt
from .errors import DomainError, ParseError
from .exact import Halfspace, TvBall, event_log_prob, sanov_bound_gap, gibbs_conditional
from .iproject import iproject_equality, iproject_inequality
from .markov import load_model, markov_rate, markov_tail_log
from .montecarlo import is_tail, mc_tail
from .rates import CgfSpec, rate_equality, rate_inequality, rate_lower
from .serialize import parse_dist, parse_f, render_csv, render_dist, render_json
from .sharp import approx_vs_exact, strong_cramer


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _build_parser() -> _Parser:
    p = _Parser(prog="ldpkit", description=__doc__)
    sub = p.add_subparsers(dest="cmd")

    def cmd(name, **kw):
        sp = sub.add_parser(name, **kw)
        sp.add_argument("--seed", type=int, default=None, help="defaults to $LDPKIT_SEED or 0")
        sp.add_argument("--output", choices=["json", "csv"], default="json")
        return sp

    sp = cmd("rate", help="rate function value at alpha")
    sp.add_argument("--dist", required=True)
    sp.add_argument("--f", default="identity")
    sp.add_argument("--alpha", type=float, required=True)
    sp.add_argument("--kind", choices=["equality", "upper", "lower"], default="equality")

    sp = cmd("tilt", help="exponentially tilted distribution")
    sp.add_argument("--dist", required=True)
    sp.add_argument("--f", default="identity")
    sp.add_argument("--lam", type=float, required=True)

    sp = cmd("iproject", help="information projection onto moment constraints")
    sp.add_argument("--dist", required=True)
    sp.add_argument(
        "--constraint",
        action="append",
        required=True,
        metavar="FSPEC=ALPHA",
        help="repeatable, e.g. identity=1.2",
    )
    sp.add_argument("--mode", choices=["eq", "ge"], default="eq")

    sp = cmd("tail-exact", help="exact i.i.d. tail probability via type classes")
    sp.add_argument("--dist", required=True)
    sp.add_argument("--f", default="identity")
    sp.add_argument("--alpha", type=float, required=True)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--direction", choices=["ge", "le"], default="ge")

    sp = cmd("sanov-exact", help="exact empirical-measure event probability and its rate bound")
    sp.add_argument("--dist", required=True)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--f", default="identity")
    sp.add_argument("--alpha", type=float)
    sp.add_argument("--direction", choices=["ge", "le"], default="ge")
    sp.add_argument("--tv-center")
    sp.add_argument("--tv-radius", type=float)

    sp = cmd("gibbs", help="single-coordinate law conditioned on an empirical-mean event")
    sp.add_argument("--dist", required=True)
    sp.add_argument("--f", default="identity")
    sp.add_argument("--alpha", type=float, required=True)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--direction", choices=["ge", "le"], default="ge")

    sp = cmd("strong-approx", help="sharp tail approximation factors or a comparison grid")
    sp.add_argument("--dist", required=True)
    sp.add_argument("--f", default="identity")
    sp.add_argument("--alpha", type=float, required=True)
    sp.add_argument("--n", type=int)
    sp.add_argument("--n-grid", help="comma-separated sample sizes; emits CSV")

    sp = cmd("tail-mc", help="plain Monte Carlo tail estimate")
    sp.add_argument("--dist", required=True)
    sp.add_argument("--f", default="identity")
    sp.add_argument("--alpha", type=float, required=True)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--N", type=int, required=True)
    sp.add_argument("--workers", type=int, default=1)

    sp = cmd("tail-is", help="tilted importance-sampling tail estimate")
    sp.add_argument("--dist", required=True)
    sp.add_argument("--f", default="identity")
    sp.add_argument("--alpha", type=float, required=True)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--N", type=int, required=True)
    sp.add_argument("--workers", type=int, default=1)

    sp = cmd("markov-rate", help="rate function of a Markov additive functional")
    sp.add_argument(
        "--model", required=True,
        help="text file: k, then k transition rows, initial probs, f values",
    )
    sp.add_argument("--alpha", type=float, required=True)

    sp = cmd("markov-tail", help="exact Markov tail probability by lattice DP")
    sp.add_argument("--model", required=True)
    sp.add_argument("--alpha", type=float, required=True)
    sp.add_argument("--n", type=int, required=True)

    return p


def _ratepoint_result(rp) -> dict:
    lam = rp.lambda_star
    if isinstance(lam, tuple):
        lam = list(lam)
    return {
        "alpha": rp.alpha,
        "gamma": rp.gamma,
        "lambda_star": lam,
        "boundary": rp.boundary,
        "tilted": None if rp.tilted is None else render_dist(rp.tilted),
    }


def _halfspace(args) -> Halfspace:
    f, _ = parse_f(args.f)
    direction = ">=" if args.direction == "ge" else "<="
    return Halfspace(f, args.alpha, direction)


def _run(args, seed: int) -> tuple[dict | None, str | None]:
    """Returns (json_payload, csv_text); exactly one is set."""
    cmd = args.cmd
    inputs: dict = {"seed": seed, "output": args.output}

    if cmd == "rate":
        dist = parse_dist(args.dist)
        f, fstr = parse_f(args.f)
        inputs.update(dist=args.dist, f=fstr, alpha=args.alpha, kind=args.kind)
        spec = CgfSpec(base=dist, f=f)
        fn = {"equality": rate_equality, "upper": rate_inequality, "lower": rate_lower}[args.kind]
        result = _ratepoint_result(fn(spec, args.alpha))
    elif cmd == "tilt":
        dist = parse_dist(args.dist)
        f, fstr = parse_f(args.f)
        inputs.update(dist=args.dist, f=fstr, lam=args.lam)
        result = {"dist": render_dist(tilt(dist, f, args.lam))}
    elif cmd == "iproject":
        dist = parse_dist(args.dist)
        if not isinstance(dist, FiniteDist):
            raise _UsageError("iproject needs a finite distribution")
        fs, alphas, fstrs = [], [], []
        for con in args.constraint:
            fspec, sep, alpha_s = con.rpartition("=")
            if not sep or not fspec:
                raise _UsageError(f"constraint must look like FSPEC=ALPHA, got {con!r}")
            f, fstr = parse_f(fspec)
            fs.append(f)
            fstrs.append(fstr)
            try:
                alphas.append(float(alpha_s))
            except ValueError:
                raise _UsageError(f"bad alpha in constraint {con!r}")
        inputs.update(dist=args.dist, constraints=[f"{s}={a!r}" for s, a in zip(fstrs, alphas)])
        inputs["mode"] = args.mode
        if args.mode == "ge":
            if len(fs) != 1:
                raise _UsageError("mode ge takes exactly one constraint")
            proj = iproject_inequality(dist, fs[0], alphas[0])
        else:
            proj = iproject_equality(dist, fs, alphas)
        result = {
            "q_star": render_dist(proj.q_star),
            "divergence": proj.divergence,
            "multipliers": None if proj.multipliers is None else list(proj.multipliers),
            "residuals": list(proj.residuals),
            "active": [bool(a) for a in proj.active],
        }
    elif cmd == "tail-exact":
        dist = parse_dist(args.dist)
        if not isinstance(dist, FiniteDist):
            raise _UsageError("tail-exact needs a finite distribution")
        hs = _halfspace(args)
        inputs.update(
            dist=args.dist, f=parse_f(args.f)[1], alpha=args.alpha, n=args.n,
            direction=args.direction,
        )
        lp = event_log_prob(dist, args.n, hs)
        result = {"n": args.n, "log_prob": lp, "prob": math.exp(lp)}
    elif cmd == "sanov-exact":
        dist = parse_dist(args.dist)
        if not isinstance(dist, FiniteDist):
            raise _UsageError("sanov-exact needs a finite distribution")
        if args.tv_center is not None or args.tv_radius is not None:
            if args.tv_center is None or args.tv_radius is None:
                raise _UsageError("tv events need both --tv-center and --tv-radius")
            center = parse_dist(args.tv_center)
            if not isinstance(center, FiniteDist):
                raise _UsageError("--tv-center must be finite")
            inputs.update(
                dist=args.dist, n=args.n, tv_center=args.tv_center, tv_radius=args.tv_radius
            )
            lp = event_log_prob(dist, args.n, TvBall(center, args.tv_radius))
            result = {"n": args.n, "log_prob": lp, "prob": math.exp(lp), "bound_log": None}
        else:
            if args.alpha is None:
                raise _UsageError("need --alpha (or --tv-center/--tv-radius)")
            hs = _halfspace(args)
            inputs.update(
                dist=args.dist, n=args.n, f=parse_f(args.f)[1], alpha=args.alpha,
                direction=args.direction,
            )
            lp, bound = sanov_bound_gap(dist, args.n, hs)
            result = {"n": args.n, "log_prob": lp, "prob": math.exp(lp), "bound_log": bound}
    elif cmd == "gibbs":
        dist = parse_dist(args.dist)
        if not isinstance(dist, FiniteDist):
            raise _UsageError("gibbs needs a finite distribution")
        hs = _halfspace(args)
        inputs.update(
            dist=args.dist, f=parse_f(args.f)[1], alpha=args.alpha, n=args.n,
            direction=args.direction,
        )
        result = {"n": args.n, "dist": render_dist(gibbs_conditional(dist, args.n, hs))}
    elif cmd == "strong-approx":
        dist = parse_dist(args.dist)
        f, fstr = parse_f(args.f)
        if args.n_grid is not None:
            if not isinstance(dist, FiniteDist):
                raise _UsageError("the comparison grid needs a finite distribution")
            try:
                grid = [int(x) for x in args.n_grid.split(",") if x.strip()]
            except ValueError:
                raise _UsageError(f"bad n grid {args.n_grid!r}")
            if not grid:
                raise _UsageError("empty n grid")
            rows = approx_vs_exact(dist, args.alpha, grid, f=f)
            return None, render_csv(["n", "exact_log", "approx_log", "ratio"], rows)
        if args.n is None:
            raise _UsageError("need --n or --n-grid")
        if args.output == "csv":
            raise _UsageError("csv output is for --n-grid")
        inputs.update(dist=args.dist, f=fstr, alpha=args.alpha, n=args.n)
        sharp = strong_cramer(CgfSpec(base=dist, f=f), args.alpha, args.n)
        result = {
            "D": sharp.D,
            "V": sharp.V,
            "c": sharp.c,
            "lattice": {
                "is_lattice": sharp.lattice.is_lattice,
                "step": sharp.lattice.step,
                "offset": sharp.lattice.offset,
            },
            "n": sharp.n,
            "log_value": sharp.log_value,
        }
    elif cmd in ("tail-mc", "tail-is"):
        dist = parse_dist(args.dist)
        f, fstr = parse_f(args.f)
        inputs.update(
            dist=args.dist, f=fstr, alpha=args.alpha, n=args.n, N=args.N, workers=args.workers
        )
        fn = mc_tail if cmd == "tail-mc" else is_tail
        est = fn(dist, f, args.alpha, args.n, args.N, seed, workers=args.workers)
        result = est.record()
    elif cmd == "markov-rate":
        model = load_model(args.model)
        inputs.update(
            model=args.model,
            transition=[list(r) for r in model.transition],
            initial=list(model.initial),
            f=list(model.f),
            alpha=args.alpha,
        )
        result = _ratepoint_result(markov_rate(model, args.alpha))
    elif cmd == "markov-tail":
        model = load_model(args.model)
        inputs.update(
            model=args.model,
            transition=[list(r) for r in model.transition],
            initial=list(model.initial),
            f=list(model.f),
            alpha=args.alpha,
            n=args.n,
        )
        lp = markov_tail_log(model, args.alpha, args.n)
        result = {"n": args.n, "log_prob": lp, "prob": math.exp(lp)}
    else:
        raise _UsageError("missing subcommand")

    if args.output == "csv":
        raise _UsageError(f"{cmd} emits JSON only")
    payload = {
        "subcommand": cmd,
        "version": __version__,
        "rng": rng.RNG_NAME,
        "inputs": inputs,
        "result": result,
    }
    return payload, None


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.cmd is None:
            raise _UsageError("missing subcommand")
        seed = args.seed if args.seed is not None else int(os.environ.get("LDPKIT_SEED", "0"))
        payload, csv_text = _run(args, seed)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (ParseError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DomainError as exc:
        err = {"error": {"token": exc.token, "message": str(exc)}}
        print(render_json(err))
        return 2
    if csv_text is not None:
        sys.stdout.write(csv_text)
    else:
        print(render_json(payload))
    return 0


if __name__ == "__main__":
    sys.exit(main())
