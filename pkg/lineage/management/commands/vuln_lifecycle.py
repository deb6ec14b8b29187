from django.utils.translation import gettext as _

from generic.utils import print_success, print_warning
from lineage.dataset import run_pipeline
from lineage.lifecycle import diff_lineage, lifecycle_stats, load_category_map, load_findings
from lineage.management.base import PipelineCommand
from lineage.records import CombineMode
from lineage.utils import canonical_json, canonical_ndjson, render_rows, write_text


def flatten(data, prefix=''):
    rows = []
    for name, value in sorted(data.items()):
        if isinstance(value, dict):
            rows.extend(flatten(value, prefix + name + '.'))
        elif isinstance(value, list):
            rows.append({'metric': prefix + name, 'value': ','.join(str(item) for item in value)})
        else:
            rows.append({'metric': prefix + name, 'value': value})
    return rows


class Command(PipelineCommand):
    help = 'Track vulnerability warnings across predecessor/successor pairs'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        self.add_corpus_arguments(parser)
        parser.add_argument('--findings', action='append', required=True,
                            help=_('Findings report, NDJSON; repeat for several tools'))
        parser.add_argument('--mode', type=str.upper, choices=CombineMode.values, default=CombineMode.UNION)
        parser.add_argument('--tools', help=_('Comma separated tools to combine (default: all reported)'))
        parser.add_argument('--category-map', help=_('JSON object tool -> {vuln_type -> category}'))
        parser.add_argument('--records-out', help=_('Write the lifecycle records to this NDJSON file'))
        parser.add_argument('--format', choices=['json', 'csv'], default='json')

    def handle(self, *args, **options):
        result = run_pipeline(self.get_corpus(options), upgraded_only=options['upgraded_only'])

        diagnostics = []
        findings = []
        for path in options['findings']:
            findings.extend(load_findings(path, result.corpus, diagnostics))
        for diagnostic in diagnostics:
            print_warning('{code}: {detail}'.format(code=diagnostic.code, detail=diagnostic.detail))

        records = diff_lineage(result.contract_pairs, result.file_pairs, findings)
        if options['records_out']:
            write_text(options['records_out'], canonical_ndjson(record.to_dict() for record in records))
            print_success(_('{count} lifecycle records written to {out}').format(count=len(records),
                                                                                out=options['records_out']))

        tools = [tool.strip() for tool in options['tools'].split(',') if tool.strip()] if options['tools'] else None
        category_map = load_category_map(options['category_map']) if options['category_map'] else None
        summary = lifecycle_stats(records, CombineMode(options['mode']), tools=tools, category_map=category_map,
                                  file_pairs=result.file_pairs, findings=findings, corpus=result.corpus)

        if options['format'] == 'csv':
            self.stdout.write(render_rows(flatten(summary.to_dict()), 'csv'), ending='')
        else:
            self.stdout.write(canonical_json(summary.to_dict()), ending='')
