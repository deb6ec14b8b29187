"""
`python -m lineage <subcommand>`: the pipeline commands under hyphenated names.
"""

import os
import sys

import django
from django.core.management import load_command_class

from generic.utils import print_error

SUBCOMMANDS = {
    'ingest': 'ingest',
    'build-lineages': 'build_lineages',
    'pair': 'pair',
    'fingerprint': 'fingerprint',
    'evaluate-lsh': 'evaluate_lsh',
    'vuln-lifecycle': 'vuln_lifecycle',
    'stats': 'stats',
    'emit': 'emit',
}

PROG = 'lineage'


def usage():
    return 'usage: {prog} {{{names}}} [options]\n'.format(prog=PROG, names=','.join(SUBCOMMANDS))


def cli(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)

    os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'lineagemgr.settings')
    django.setup()

    if not argv or argv[0] in ('-h', '--help'):
        sys.stderr.write(usage())
        return 0 if argv else 1

    name = SUBCOMMANDS.get(argv[0])
    if name is None:
        sys.stderr.write(usage())
        print_error('{prog}: error: unknown subcommand {name!r}'.format(prog=PROG, name=argv[0]))
        return 1

    command = load_command_class('lineage', name)
    try:
        command.run_from_argv([PROG, argv[0]] + argv[1:])
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 1

    return 0
