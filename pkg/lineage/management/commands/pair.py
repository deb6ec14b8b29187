from django.utils._os import safe_join
from django.utils.translation import gettext as _

from generic.utils import print_success
from lineage.dataset import FILE_PAIRS, FUNCTION_PAIRS, run_pipeline
from lineage.management.base import PipelineCommand
from lineage.utils import canonical_json, write_text


class Command(PipelineCommand):
    help = 'Pair the files and functions of every predecessor/successor contract pair'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        self.add_corpus_arguments(parser)
        parser.add_argument('--out', required=True, help=_('Output directory'))

    def handle(self, *args, **options):
        result = run_pipeline(self.get_corpus(options), upgraded_only=options['upgraded_only'])

        write_text(safe_join(options['out'], FILE_PAIRS),
                   canonical_json([pair.to_dict() for pair in result.file_pairs]))
        write_text(safe_join(options['out'], FUNCTION_PAIRS),
                   canonical_json([pair.to_dict() for pair in result.function_pairs]))
        print_success(_('{files} file pairs and {functions} function pairs written to {out}').format(
            files=len(result.file_pairs), functions=len(result.function_pairs), out=options['out']))

        self.stdout.write(canonical_json({
            'contract_pairs': len(result.contract_pairs),
            'file_pairs': len(result.file_pairs),
            'function_pairs': len(result.function_pairs),
            'diagnostics': [diagnostic.to_dict() for diagnostic in result.pairing_diagnostics],
        }), ending='')
