"""
SimPINNs orbit restitution - command-line entry point

Recovers Keplerian elements (e, i, ω) from simulated sensor images with an
inverter network trained on a mix of observations (PINN reconstruction loss)
and simulated pairs (supervised parameter loss).

Usage:
    python main.py gen    --profile toy
    python main.py train  --profile toy --n_observed 20 --n_simulated 20
    python main.py eval   --checkpoint runs/.../model.spnc
    python main.py render --checkpoint runs/.../model.spnc --dataset data/test-....spnd --k 4
    python main.py lambda-cv --config experiment.txt
    python main.py sweep  --profile desk --workers 4

Any ExperimentConfig key can be given as ``--key value`` (``--n-test 100``
and ``--n_test 100`` are equivalent). Errors print one line
``error[<CODE>]: <message>`` on stderr and exit nonzero.
"""
import sys
from typing import Dict, List, Optional, Sequence

from agno.utils.log import logger, set_log_level_to_debug

from config import config, validate_config
from infrastructure.errors import ConfigError, SimPinnError
from infrastructure.observability import init_observability


def parse_overrides(tokens: Sequence[str]) -> Dict[str, str]:
    """
    ``--key value`` / ``--key=value`` pairs left over by argparse.

    Raises:
        ConfigError: a stray token or a flag without a value
    """
    overrides: Dict[str, str] = {}
    tokens = list(tokens)
    k = 0
    while k < len(tokens):
        token = tokens[k]
        if not token.startswith("--") or len(token) <= 2:
            raise ConfigError(f"unexpected argument {token!r}")
        if "=" in token:
            key, value = token[2:].split("=", 1)
            k += 1
        else:
            if k + 1 >= len(tokens):
                raise ConfigError(f"flag {token} needs a value")
            key, value = token[2:], tokens[k + 1]
            k += 2
        overrides[key] = value
    return overrides


def build_parser():
    import argparse

    from bench.profiles import DEFAULT_PROFILE, list_presets

    common = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    common.add_argument("--config", type=str, help="key = value experiment file")
    profiles = "; ".join(f"{k}: {v}" for k, v in list_presets().items())
    common.add_argument("--profile", type=str, default=None, help=f"{profiles} (default: {DEFAULT_PROFILE})")
    common.add_argument("--verbose", "-v", action="store_true", help="Debug logging")

    parser = argparse.ArgumentParser(
        description="SimPINNs orbit restitution - hybrid physics-informed inverter training",
        allow_abbrev=False,
    )

    sub = parser.add_subparsers(dest="command")
    sub.add_parser("gen", parents=[common], allow_abbrev=False, help="Generate labeled / observed / test datasets")

    p_train = sub.add_parser("train", parents=[common], allow_abbrev=False, help="Train one run on generated datasets")
    p_train.add_argument("--labeled", type=str, help="Labeled dataset (default: from config)")
    p_train.add_argument("--observed", type=str, help="Observed dataset (default: from config)")
    p_train.add_argument("--test", type=str, help="Test dataset (default: from config)")

    p_eval = sub.add_parser("eval", parents=[common], allow_abbrev=False, help="Evaluate a checkpoint on the test pool")
    p_eval.add_argument("--checkpoint", type=str, required=True)
    p_eval.add_argument("--test", type=str, help="Test dataset (default: from config)")

    p_sweep = sub.add_parser("sweep", parents=[common], allow_abbrev=False, help="Run the N_o x N_s sweep")
    p_sweep.add_argument("--workers", "-w", type=int, default=None,
                         help="Parallel cells (default: SIMPINN_WORKERS or 1)")

    p_render = sub.add_parser("render", parents=[common], allow_abbrev=False, help="Side-by-side reconstruction gallery")
    p_render.add_argument("--checkpoint", type=str, required=True)
    p_render.add_argument("--dataset", type=str, required=True)
    p_render.add_argument("--k", type=int, default=None, help="Number of samples (default: gallery_k)")

    sub.add_parser("lambda-cv", parents=[common], allow_abbrev=False, help="Cross-validate λ over lambda_grid")
    return parser


def run(argv: Optional[List[str]] = None) -> int:
    """Parse, dispatch, map errors to exit codes"""
    parser = build_parser()
    args, rest = parser.parse_known_args(argv)
    if args.command is None:
        parser.print_help()
        return 1

    if args.verbose or config.runtime.log_level == "debug":
        set_log_level_to_debug()

    try:
        from bench.experiment import build_experiment
        from bench import commands

        exp = build_experiment(args.profile, args.config, parse_overrides(rest))
        for issue in validate_config():
            logger.warning(f"[Config] {issue}")
        init_observability()

        if args.command == "gen":
            commands.cmd_gen(exp)
        elif args.command == "train":
            commands.cmd_train(exp, args.labeled, args.observed, args.test)
        elif args.command == "eval":
            commands.cmd_eval(exp, args.checkpoint, args.test)
        elif args.command == "sweep":
            commands.cmd_sweep(exp, workers=args.workers or config.runtime.workers)
        elif args.command == "render":
            commands.cmd_render(exp, args.checkpoint, args.dataset, exp.gallery_k if args.k is None else args.k)
        elif args.command == "lambda-cv":
            commands.cmd_lambda_cv(exp)
        return 0
    except SimPinnError as e:
        print(e.one_line(), file=sys.stderr)
        return e.exit_code
    except KeyboardInterrupt:
        print("error[INTERRUPTED]: interrupted", file=sys.stderr)
        return 130
    except Exception as e:
        logger.debug("unexpected failure", exc_info=True)
        text = " ".join(f"{type(e).__name__}: {e}".split())
        print(f"error[INTERNAL]: {text}", file=sys.stderr)
        return 1


def main():
    """Main entry point for CLI usage"""
    return run()


if __name__ == "__main__":
    sys.exit(main() or 0)
