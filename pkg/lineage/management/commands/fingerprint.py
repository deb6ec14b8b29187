from django.conf import settings
from django.utils.translation import gettext as _

from generic.utils import print_success
from lineage.fingerprints import LSHIndex, dump_fingerprints, fingerprint_corpus, load_fingerprints
from lineage.ingest import load_corpus
from lineage.management.base import PipelineCommand
from lineage.records import Category
from lineage.utils import canonical_json

CATEGORY_CHOICES = [category.name.lower() for category in Category]


class Command(PipelineCommand):
    help = 'Fingerprint open-source contracts, optionally list the contracts similar to one of them'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--contracts', help=_('Contract records, NDJSON'))
        parser.add_argument('--fingerprints', help=_('Reuse fingerprints from this NDJSON file'))
        parser.add_argument('--out', help=_('Write fingerprints to this NDJSON file'))
        parser.add_argument('--k', type=int, default=None, help=_('Signature length'))
        self.add_banding_arguments(parser)
        parser.add_argument('--query', help=_('Address to find similar contracts for'))
        parser.add_argument('--min-category', type=str.lower, choices=CATEGORY_CHOICES, default='low')

    def handle(self, *args, **options):
        if options['fingerprints']:
            fingerprints = load_fingerprints(options['fingerprints'])
        elif options['contracts']:
            corpus = load_corpus(None, options['contracts'])
            fingerprints = fingerprint_corpus(corpus, k=options['k'] or settings.FINGERPRINT['K'],
                                              seed=self.get_seed(options))
        else:
            raise ValueError(_('Pass --contracts or --fingerprints'))

        if options['out']:
            dump_fingerprints(fingerprints.values(), options['out'])
            print_success(_('{count} fingerprints written to {out}').format(count=len(fingerprints),
                                                                           out=options['out']))

        if not options['query']:
            self.stdout.write(canonical_json({'fingerprints': len(fingerprints)}), ending='')
            return

        index = LSHIndex(fingerprints.values(), bands=options['bands'], rows=options['rows'])
        results = index.query(options['query'].lower(), Category.from_name(options['min_category']))
        self.stdout.write(canonical_json([{
            'address': address,
            'estimated_jaccard': verdict.estimated_jaccard,
            'category': verdict.category.name,
        } for address, verdict in results]), ending='')
