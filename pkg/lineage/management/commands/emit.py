from django.utils.translation import gettext as _

from generic.utils import print_success
from lineage.dataset import compute_stats, emit_dataset, run_pipeline
from lineage.management.base import PipelineCommand
from lineage.utils import canonical_json


class Command(PipelineCommand):
    help = 'Run the whole pipeline and write the lineage dataset'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        self.add_corpus_arguments(parser)
        parser.add_argument('--out', required=True, help=_('Dataset directory'))

    def handle(self, *args, **options):
        result = run_pipeline(self.get_corpus(options), upgraded_only=options['upgraded_only'])
        bundle = emit_dataset(result, options['out'], inputs=self.get_inputs(options))
        print_success(_('Dataset with {lineages} lineages written to {out}').format(lineages=len(bundle.lineages),
                                                                                   out=options['out']))

        self.stdout.write(canonical_json(compute_stats(bundle).to_dict()), ending='')
