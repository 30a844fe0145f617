"""
CLI module - command-line surface

Includes the argparse entry point and the five commands
"""

from .commands import cmd_generate_data, cmd_pretrain, cmd_transfer, cmd_eval, cmd_compare
from .main import main, build_parser

__all__ = [
    'cmd_generate_data',
    'cmd_pretrain',
    'cmd_transfer',
    'cmd_eval',
    'cmd_compare',
    'main',
    'build_parser'
]
