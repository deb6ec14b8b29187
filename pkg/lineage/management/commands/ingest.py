import os

from django.utils.translation import gettext as _

from generic.utils import print_success
from lineage.ingest import dump_corpus, hash_self_test, upgrade_calls, upgraded_proxies
from lineage.management.base import PipelineCommand
from lineage.utils import canonical_json


class Command(PipelineCommand):
    help = 'Load trace and contract fixtures, resolve callees and write the canonical corpus'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        self.add_corpus_arguments(parser)
        parser.add_argument('--out', help=_('Directory for the canonical traces.ndjson and contracts.ndjson'))

    def handle(self, *args, **options):
        hash_self_test()
        corpus = self.get_corpus(options)

        if options['out']:
            dump_corpus(corpus, os.path.join(options['out'], 'traces.ndjson'),
                        os.path.join(options['out'], 'contracts.ndjson'))
            print_success(_('Canonical corpus written to {out}').format(out=options['out']))

        self.stdout.write(canonical_json({
            'events': len(corpus.events),
            'contracts': len(corpus.contracts),
            'proxies': len(corpus.proxies()),
            'upgrade_calls': len(upgrade_calls(corpus)),
            'upgraded_proxies': upgraded_proxies(corpus),
            'diagnostics': [diagnostic.to_dict() for diagnostic in corpus.diagnostics],
        }), ending='')
