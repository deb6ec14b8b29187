import csv
import hashlib
import io
import json
from pathlib import Path

from django.core.serializers.json import DjangoJSONEncoder
from django.utils.translation import gettext as _

from lineage.exceptions import ParseError


def read_ndjson(path, *, errors: list = None):
    """
    Yield (line number, object) for every non-blank line of an NDJSON file.

    Bad lines raise ParseError, unless an `errors` list is given to collect them.
    """
    with open(path, 'r', encoding='utf-8', newline='') as file:
        for lineno, line in enumerate(file, start=1):
            line = line.strip()
            if not line:
                continue

            try:
                try:
                    data = json.loads(line)
                except ValueError as e:
                    raise ParseError(_('Invalid JSON: {error}').format(error=e), path=path, lineno=lineno) from None

                if not isinstance(data, dict):
                    raise ParseError(_('Expected a JSON object'), path=path, lineno=lineno)

            except ParseError as e:
                if errors is None:
                    raise
                errors.append(e)
                continue

            yield lineno, data


def canonical_json(data, *, indent=2) -> str:
    """
    Sorted keys, UTF-8 text, LF line ends: identical data gives identical text.
    """
    return json.dumps(data, cls=DjangoJSONEncoder, sort_keys=True, indent=indent, ensure_ascii=False) + '\n'


def canonical_ndjson(rows) -> str:
    return ''.join(json.dumps(row, cls=DjangoJSONEncoder, sort_keys=True, ensure_ascii=False,
                              separators=(',', ':')) + '\n' for row in rows)


def write_text(path, text: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8', newline='\n') as file:
        file.write(text)


def file_digest(path) -> str:
    digest = hashlib.sha256()
    with open(path, 'rb') as file:
        for chunk in iter(lambda: file.read(65536), b''):
            digest.update(chunk)
    return digest.hexdigest()


def render_rows(rows, fmt='json', fieldnames=None) -> str:
    """
    Report rows as canonical JSON or as CSV, undefined values become empty cells.
    """
    rows = list(rows)
    if fmt == 'json':
        return canonical_json(rows)

    if fmt == 'csv':
        output = io.StringIO()
        writer = csv.DictWriter(output, fieldnames=fieldnames or (list(rows[0]) if rows else []),
                                lineterminator='\n')
        writer.writeheader()
        for row in rows:
            writer.writerow({key: '' if value is None else value for key, value in row.items()})
        return output.getvalue()

    raise ValueError(_('Unknown format {fmt}').format(fmt=fmt))
