from django.utils.translation import gettext as _

from lineage.dataset import compute_stats, load_dataset
from lineage.management.base import PipelineCommand
from lineage.utils import canonical_json, render_rows


class Command(PipelineCommand):
    help = 'Summary statistics of an emitted lineage dataset'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('dataset', help=_('Dataset directory written by emit'))
        parser.add_argument('--format', choices=['json', 'csv'], default='json')

    def handle(self, *args, **options):
        report = compute_stats(load_dataset(options['dataset']))

        if options['format'] == 'csv':
            self.stdout.write(render_rows(report.to_rows(), 'csv', fieldnames=['metric', 'value']), ending='')
        else:
            self.stdout.write(canonical_json(report.to_dict()), ending='')
