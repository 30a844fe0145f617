"""byel command line: generate-data, pretrain, transfer, eval, compare"""

import argparse
import logging
import sys
from typing import List, Optional

from ..utils.config import resolve_config
from ..utils.logging_utils import setup_logging
from .commands import (cmd_compare, cmd_eval, cmd_generate_data, cmd_pretrain, cmd_transfer,
                       exit_code_for)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', type=str, default=None,
                        help='Flat key-value JSON/YAML config file')
    common.add_argument('--profile', choices=['desk', 'paper'], default=None,
                        help='Profile providing the defaults (default: desk)')
    common.add_argument('--seed', type=int, default=None,
                        help='Master seed; overrides every section seed')
    common.add_argument('--run-dir', type=str, default=None,
                        help='Directory receiving config, metrics, checkpoints and reports')
    common.add_argument('--data-root', type=str, default=None,
                        help='Directory holding the ToyEmotions trees and manifests')

    parser = argparse.ArgumentParser(prog='byel', description='BYEL emotion-aware pre-training and transfer')
    subparsers = parser.add_subparsers(dest='command', required=True)

    subparsers.add_parser('generate-data', parents=[common], help='Generate ToyEmotions source/target data')

    pretrain = subparsers.add_parser('pretrain', parents=[common], help='Phase 1: BYEL pre-training')
    pretrain.add_argument('--resume', type=str, default=None,
                          help='Epoch-boundary pre-training checkpoint to continue from')

    transfer = subparsers.add_parser('transfer', parents=[common], help='Phase 2: transfer learning')
    transfer.add_argument('--checkpoint', type=str, default=None,
                          help='Pre-training checkpoint (default: latest in run dir)')
    transfer.add_argument('--from-scratch', action='store_true',
                          help='Start from a randomly initialized encoder')

    evaluate = subparsers.add_parser('eval', parents=[common], help='Evaluate on the target domain')
    evaluate.add_argument('--checkpoint', type=str, default=None,
                          help="Transfer checkpoint (default: best in run dir), or 'oracle'")

    subparsers.add_parser('compare', parents=[common], help='Supervised / BYOL / BYEL comparison')
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging()
    logger = logging.getLogger(__name__)

    overrides = {'seed': args.seed, 'paths.run_dir': args.run_dir, 'paths.data_root': args.data_root}
    try:
        config = resolve_config(args.profile, args.config, overrides)
    except Exception as e:
        code = exit_code_for(e)
        if code is None:
            raise
        logger.error(f"Error loading configuration: {e}")
        return code

    if args.command == 'generate-data':
        return cmd_generate_data(config)
    if args.command == 'pretrain':
        return cmd_pretrain(config, resume=args.resume)
    if args.command == 'transfer':
        return cmd_transfer(config, checkpoint=args.checkpoint, from_scratch=args.from_scratch)
    if args.command == 'eval':
        return cmd_eval(config, checkpoint=args.checkpoint)
    return cmd_compare(config)


if __name__ == '__main__':
    sys.exit(main())
