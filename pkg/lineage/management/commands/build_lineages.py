from collections import Counter

from django.utils._os import safe_join
from django.utils.translation import gettext as _

from generic.utils import print_success
from lineage.dataset import CONTRACT_PAIRS, DIAGNOSTICS, LINEAGES, creator_rule_ablation
from lineage.ingest import upgraded_proxies
from lineage.lineages import build_lineages, contract_pairs
from lineage.management.base import PipelineCommand
from lineage.utils import canonical_json, write_text


class Command(PipelineCommand):
    help = 'Classify the callees of every proxy into lineages'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        self.add_corpus_arguments(parser)
        parser.add_argument('--out', required=True, help=_('Output directory'))
        parser.add_argument('--ignore-creator', action='store_true',
                            help=_('Do not require one creator per lineage'))
        parser.add_argument('--creator-ablation', action='store_true',
                            help=_('Also report pairing figures with and without the creator rule'))

    def handle(self, *args, **options):
        corpus = self.get_corpus(options)
        proxies = upgraded_proxies(corpus) if options['upgraded_only'] else None

        lineages, diagnostics = build_lineages(corpus, same_creator=not options['ignore_creator'], proxies=proxies)
        pairs = contract_pairs(lineages)

        out = options['out']
        write_text(safe_join(out, LINEAGES), canonical_json([lineage.to_dict() for lineage in lineages]))
        write_text(safe_join(out, CONTRACT_PAIRS), canonical_json([pair.to_dict() for pair in pairs]))
        write_text(safe_join(out, DIAGNOSTICS), canonical_json({
            'exclusions': [exclusion.to_dict() for exclusion in diagnostics.exclusions],
            'messages': [diagnostic.to_dict() for diagnostic in corpus.diagnostics],
        }))
        print_success(_('{lineages} lineages and {pairs} contract pairs written to {out}').format(
            lineages=len(lineages), pairs=len(pairs), out=out))

        summary = {
            'lineages': len(lineages),
            'contract_pairs': len(pairs),
            'exclusions': {str(reason): count for reason, count in sorted(
                Counter(exclusion.reason for exclusion in diagnostics.exclusions).items())},
        }
        if options['creator_ablation']:
            summary['creator_ablation'] = creator_rule_ablation(corpus, upgraded_only=options['upgraded_only'])

        self.stdout.write(canonical_json(summary), ending='')

