import sys

from django.conf import settings
from django.core.exceptions import ImproperlyConfigured, SuspiciousFileOperation, ValidationError
from django.core.management.base import BaseCommand, CommandError
from django.utils.translation import gettext as _

from generic.utils import print_notice, print_warning
from lineage.exceptions import BundleIntegrityError
from lineage.ingest import load_corpus, resolve_callees


class PipelineCommand(BaseCommand):
    """
    Base for the pipeline commands.

    Validation, configuration and lookup errors exit with 1, I/O errors with 2.
    Argument errors print the usage and exit with 1.
    """
    requires_system_checks = []
    requires_migrations_checks = False

    def create_parser(self, prog_name, subcommand, **kwargs):
        parser = super().create_parser(prog_name, subcommand, **kwargs)

        def error(message):
            if parser.called_from_command_line:
                parser.print_usage(sys.stderr)
                parser.exit(1, _('{prog}: error: {message}\n').format(prog=parser.prog, message=message))
            raise CommandError(_('Error: {message}').format(message=message), returncode=1)

        parser.error = error
        return parser

    def add_arguments(self, parser):
        parser.add_argument('--seed', type=int, default=None,
                            help=_('Seed for every randomized component, default from settings'))

    def add_corpus_arguments(self, parser, required=True):
        parser.add_argument('--traces', required=required, help=_('Trace events, NDJSON'))
        parser.add_argument('--contracts', required=required, help=_('Contract records, NDJSON'))
        parser.add_argument('--cache-dir', help=_('Explorer cache used to resolve unknown callees'))
        parser.add_argument('--allow-network', action='store_true',
                            help=_('Query the block explorer for callees missing from the cache'))
        parser.add_argument('--lenient', action='store_true',
                            help=_('Report malformed rows as diagnostics instead of failing'))
        parser.add_argument('--upgraded-only', action='store_true',
                            help=_('Only classify proxies seen calling an upgrade function'))

    def add_banding_arguments(self, parser):
        parser.add_argument('--bands', type=int, default=None,
                            help=_('LSH bands, default {bands} from settings; the common 32 bands x 8 rows '
                                   'banding is stricter and misses more pairs near Jaccard 0.6').format(
                                       bands=settings.FINGERPRINT['BANDS']))
        parser.add_argument('--rows', type=int, default=None,
                            help=_('Rows per LSH band, default {rows} from settings; bands x rows must equal '
                                   'the signature length').format(rows=settings.FINGERPRINT['ROWS']))

    def get_seed(self, options):
        return settings.FINGERPRINT['SEED'] if options.get('seed') is None else options['seed']

    def get_corpus(self, options):
        corpus = load_corpus(options['traces'], options['contracts'], lenient=options['lenient'])
        if options.get('cache_dir'):
            corpus = resolve_callees(corpus, options['cache_dir'], allow_network=options['allow_network'])

        if corpus.diagnostics:
            print_warning(_('{count} input diagnostics').format(count=len(corpus.diagnostics)))
        print_notice(_('Loaded {events} events and {contracts} contracts').format(
            events=len(corpus.events), contracts=len(corpus.contracts)))
        return corpus

    def get_inputs(self, options):
        return {name: options[name] for name in ('traces', 'contracts') if options.get(name)}

    def execute(self, *args, **options):
        try:
            return super().execute(*args, **options)
        except CommandError:
            raise
        except ValidationError as e:
            raise CommandError('; '.join(e.messages), returncode=1) from e
        except (ImproperlyConfigured, LookupError, ValueError, BundleIntegrityError) as e:
            raise CommandError(str(e), returncode=1) from e
        except (OSError, SuspiciousFileOperation) as e:
            raise CommandError(str(e), returncode=2) from e
