from django.conf import settings
from django.utils.translation import gettext as _

from generic.utils import print_success, print_warning
from lineage.evaluation import DEFAULT_SCOPES, DEFAULT_THRESHOLDS, TABLE_COLUMNS, evaluate, scenario_table
from lineage.fingerprints import LSHIndex, fingerprint_corpus
from lineage.ingest import upgraded_proxies
from lineage.lineages import build_lineages
from lineage.management.base import PipelineCommand
from lineage.records import Category, ContractScope
from lineage.utils import render_rows, write_text

THRESHOLD_CHOICES = [category.name.lower() for category in DEFAULT_THRESHOLDS]
SCOPE_CHOICES = [scope.value.lower() for scope in ContractScope]


class Command(PipelineCommand):
    help = 'Score similarity-based lineage construction against the rule-based lineages'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        self.add_corpus_arguments(parser)
        parser.add_argument('--threshold', action='append', type=str.lower, choices=THRESHOLD_CHOICES,
                            help=_('Similarity category, repeat for several (default: all)'))
        parser.add_argument('--scope', action='append', type=str.lower, choices=SCOPE_CHOICES,
                            help=_('Contract scope, repeat for several (default: all)'))
        parser.add_argument('--average', choices=['micro', 'macro'], default='micro')
        parser.add_argument('--format', choices=['json', 'csv'], default='json')
        parser.add_argument('--out', help=_('Also write the table to this file'))
        parser.add_argument('--k', type=int, default=None, help=_('Signature length'))
        self.add_banding_arguments(parser)

    def handle(self, *args, **options):
        thresholds = [Category.from_name(name) for name in options['threshold'] or []] or list(DEFAULT_THRESHOLDS)
        scopes = [ContractScope(name.upper()) for name in options['scope'] or []] or list(DEFAULT_SCOPES)

        corpus = self.get_corpus(options)
        proxies = upgraded_proxies(corpus) if options['upgraded_only'] else None
        lineages, _diagnostics = build_lineages(corpus, proxies=proxies)
        members = {address for lineage in lineages for address in lineage.addresses}

        fingerprints = fingerprint_corpus(corpus, k=options['k'] or settings.FINGERPRINT['K'],
                                          seed=self.get_seed(options))
        index = LSHIndex(fingerprints.values(), bands=options['bands'], rows=options['rows'])

        diagnostics = []
        results = evaluate(lineages, corpus, index, thresholds, scopes, average=options['average'],
                           diagnostics=diagnostics)
        if diagnostics:
            print_warning(_('{count} queries have no ground truth in scope').format(count=len(diagnostics)))

        text = render_rows(scenario_table(results), options['format'], fieldnames=TABLE_COLUMNS)
        if options['out']:
            write_text(options['out'], text)
            print_success(_('Evaluated {queries} lineage members, table written to {out}').format(
                queries=len(members), out=options['out']))

        self.stdout.write(text, ending='')
