import json
import posixpath
import re
import sys
import threading
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, Iterable, List

from django.conf import settings
from django.core.cache.backends.filebased import FileBasedCache
from django.core.exceptions import ImproperlyConfigured, ValidationError
from django.utils.translation import gettext as _
from eth_utils import keccak
from requests import RequestException

from generic.utils import print_debug, print_warning
from lineage.exceptions import FetchError, ParseError
from lineage.fields import AddressField
from lineage.forms import TRACE_FIELDS, ContractRecordForm, TraceEventForm, form_errors_as_text
from lineage.records import ContractRecord, Corpus, Diagnostic, SourceFile, TraceEvent
from lineage.utils import canonical_ndjson, read_ndjson, write_text
from lineage.utils.explorer import ExplorerClient

SIGNATURE_PATTERN = re.compile(r'\A[A-Za-z_$][A-Za-z0-9_$]*\(([A-Za-z0-9_$\[\](),]*)\)\Z')

# keccak-256 of the empty input, NIST SHA3-256 gives a different digest
EMPTY_KECCAK = 'c5d2460186f7233c927e7db2dcc703c0e500b653ca82273b7bfad8045d85a470'

MALFORMED_ROW = 'MALFORMED_ROW'
DUPLICATE_EVENT = 'DUPLICATE_EVENT'
UNRESOLVED_CALLEE = 'UNRESOLVED_CALLEE'
NON_MONOTONIC_TIMESTAMP = 'NON_MONOTONIC_TIMESTAMP'

UNVERIFIED_ABI = 'Contract source code not verified'


def hash_self_test():
    digest = keccak(b'').hex()
    if digest != EMPTY_KECCAK:
        raise ImproperlyConfigured(_('keccak-256 backend returned {digest} for the empty input').format(
            digest=digest))


def compute_selector(signature: str) -> str:
    """
    First 4 bytes of keccak-256 over a canonical signature like "transfer(address,uint256)".
    """
    if not isinstance(signature, str) or not signature.isascii():
        raise ValidationError(_('Signature must be an ASCII string'), code='invalid')

    match = SIGNATURE_PATTERN.match(signature)
    if not match:
        raise ValidationError(_('Malformed function signature: {signature!r}').format(signature=signature),
                              code='invalid')

    # Tuple parameters may nest, but they have to balance
    depth = 0
    for char in match.group(1):
        depth += {'(': 1, ')': -1}.get(char, 0)
        if depth < 0:
            break
    if depth != 0:
        raise ValidationError(_('Unbalanced parentheses in signature: {signature!r}').format(signature=signature),
                              code='invalid')

    return '0x' + keccak(text=signature)[:4].hex()


def upgrade_selectors(signatures: Iterable[str] = None) -> Dict[str, str]:
    if signatures is None:
        signatures = settings.UPGRADE_SIGNATURES

    return {compute_selector(signature): signature for signature in signatures}


def upgrade_calls(corpus: Corpus, signatures: Iterable[str] = None) -> List[TraceEvent]:
    """
    Trace events that invoke one of the monitored upgrade functions.
    """
    selectors = upgrade_selectors(signatures)
    return [event for event in corpus.events if event.selector in selectors]


def upgraded_proxies(corpus: Corpus, signatures: Iterable[str] = None) -> List[str]:
    return sorted({event.proxy_address for event in upgrade_calls(corpus, signatures)})


def _load_events(path, lenient, diagnostics):
    errors = [] if lenient else None
    events = []
    for lineno, data in read_ndjson(path, errors=errors):
        try:
            keys = set(data)
            if keys != set(TRACE_FIELDS):
                missing = sorted(set(TRACE_FIELDS) - keys)
                extra = sorted(keys - set(TRACE_FIELDS))
                raise ParseError(_('Expected fields {expected}, missing {missing}, unexpected {extra}').format(
                    expected=','.join(TRACE_FIELDS), missing=missing, extra=extra), path=path, lineno=lineno)

            form = TraceEventForm(data=data)
            if not form.is_valid():
                raise ParseError(form_errors_as_text(form), path=path, lineno=lineno)

        except ParseError as e:
            if not lenient:
                raise
            errors.append(e)
            continue

        events.append(TraceEvent(**form.cleaned_data))

    for error in errors or []:
        diagnostics.append(Diagnostic(MALFORMED_ROW, error.message))

    return events


def _load_contracts(path, lenient, diagnostics):
    errors = [] if lenient else None
    contracts = {}
    for lineno, data in read_ndjson(path, errors=errors):
        form = ContractRecordForm(data=data)
        try:
            if not form.is_valid():
                raise ParseError(form_errors_as_text(form), path=path, lineno=lineno)

            record = ContractRecord(**form.cleaned_data)
            if record.address in contracts:
                raise ParseError(_('Duplicate contract {address}').format(address=record.address), path=path,
                                 lineno=lineno)

        except ParseError as e:
            if not lenient:
                raise
            errors.append(e)
            continue

        contracts[record.address] = record

    for error in errors or []:
        diagnostics.append(Diagnostic(MALFORMED_ROW, error.message))

    return dict(sorted(contracts.items()))


def canonicalize_events(events: Iterable[TraceEvent], diagnostics: List[Diagnostic] = None) -> List[TraceEvent]:
    """
    Sort by (block_number, tx_id) and keep one event per (tx_id, callee).
    """
    seen = set()
    result = []
    for event in sorted(events, key=lambda e: e.sort_key):
        key = (event.tx_id, event.callee_address)
        if key in seen:
            if diagnostics is not None:
                diagnostics.append(Diagnostic(DUPLICATE_EVENT, '{tx_id} -> {callee}'.format(
                    tx_id=event.tx_id, callee=event.callee_address)))
            continue
        seen.add(key)
        result.append(event)

    if diagnostics is not None:
        for previous, current in zip(result, result[1:]):
            if current.block_number == previous.block_number:
                consistent = current.timestamp == previous.timestamp
            else:
                consistent = current.timestamp > previous.timestamp

            if not consistent:
                diagnostics.append(Diagnostic(NON_MONOTONIC_TIMESTAMP, _(
                    'Block {block} at {timestamp} does not follow block {previous_block} at {previous_timestamp}'
                ).format(block=current.block_number, timestamp=current.timestamp,
                         previous_block=previous.block_number, previous_timestamp=previous.timestamp)))

    return result


def load_corpus(trace_path, contracts_path, *, lenient=False) -> Corpus:
    diagnostics = []
    events = []
    if trace_path is not None:
        events = canonicalize_events(_load_events(trace_path, lenient, diagnostics), diagnostics)
    contracts = _load_contracts(contracts_path, lenient, diagnostics)

    for callee in sorted({event.callee_address for event in events}):
        if callee not in contracts:
            diagnostics.append(Diagnostic(UNRESOLVED_CALLEE, callee))

    print_debug(_('Loaded {events} trace events and {contracts} contracts').format(events=len(events),
                                                                                  contracts=len(contracts)))
    return Corpus(events=events, contracts=contracts, diagnostics=diagnostics)


def serialize_corpus(corpus: Corpus):
    """
    Canonical (trace, contracts) NDJSON texts.
    """
    events = canonicalize_events(corpus.events)
    contracts = [corpus.contracts[address] for address in sorted(corpus.contracts)]
    return (canonical_ndjson(event.to_dict() for event in events),
            canonical_ndjson(record.to_dict() for record in contracts))


def dump_corpus(corpus: Corpus, trace_path, contracts_path):
    trace_text, contracts_text = serialize_corpus(corpus)
    write_text(trace_path, trace_text)
    write_text(contracts_path, contracts_text)


def source_file_from_path(path: str, content: str):
    path = posixpath.normpath('/' + path.replace('\\', '/')).lstrip('/')
    directory, filename = posixpath.split(path)
    if not filename.endswith('.sol'):
        return None
    return SourceFile(directory=directory, filename=filename, content=content)


def parse_source_files(code: str, contract_name: str):
    """
    Explorer source comes as plain Solidity, as a {filename: {content}} map or
    as standard JSON input, the latter sometimes wrapped in double braces.
    """
    code = (code or '').strip()
    if not code:
        return ()

    if code.startswith('{{') and code.endswith('}}'):
        code = code[1:-1]

    if code.startswith('{'):
        try:
            data = json.loads(code)
        except ValueError:
            data = None

        if isinstance(data, dict):
            sources = data.get('sources', data)
            files = {}
            for path, entry in sources.items():
                content = entry.get('content', '') if isinstance(entry, dict) else str(entry)
                source_file = source_file_from_path(path, content)
                if source_file:
                    files[(source_file.directory, source_file.filename)] = source_file
            return tuple(files[key] for key in sorted(files))

    return (SourceFile(directory='', filename=(contract_name or 'Contract') + '.sol', content=code),)


def contract_from_explorer(address: str, source: dict, creation: dict) -> ContractRecord:
    creator = (creation.get('contractCreator') or '').lower()
    try:
        creator = AddressField().clean(creator)
    except ValidationError:
        raise FetchError(address, _('no contract creator returned')) from None

    verified = bool(source.get('SourceCode')) and source.get('ABI') != UNVERIFIED_ABI
    files = parse_source_files(source.get('SourceCode'), source.get('ContractName')) if verified else ()

    return ContractRecord(
        address=address,
        creator=creator,
        deploy_timestamp=int(creation.get('timestamp') or 0),
        verified=verified,
        open_source=bool(files),
        files=files,
    )


_caches = {}
_address_locks = {}
_locks_guard = threading.Lock()


def get_contract_cache(cache_dir):
    with _locks_guard:
        if cache_dir not in _caches:
            _caches[cache_dir] = FileBasedCache(str(cache_dir), {
                'TIMEOUT': None,
                'OPTIONS': {
                    'MAX_ENTRIES': sys.maxsize,
                },
            })
        return _caches[cache_dir]


def _address_lock(address):
    with _locks_guard:
        return _address_locks.setdefault(address, threading.Lock())


def fetch_contract(address: str, cache_dir, *, allow_network=False, client: ExplorerClient = None) -> ContractRecord:
    """
    Contract metadata and source from the on-disk cache, or from the explorer.
    """
    address = AddressField().clean(address)
    cache = get_contract_cache(cache_dir)
    key = 'contract:' + address

    # One writer per address
    with _address_lock(address):
        data = cache.get(key)
        if data is None:
            if not allow_network:
                raise FetchError(address, _('not cached and network access is disabled'))

            client = client or ExplorerClient()
            try:
                record = contract_from_explorer(address, client.get_source(address), client.get_creation(address))
            except FetchError:
                raise
            except RequestException as e:
                raise FetchError(address, str(e)) from e

            data = record.to_dict()
            cache.set(key, data, timeout=None)

    return ContractRecord.from_dict(data)


def fetch_contracts(addresses: Iterable[str], cache_dir, *, allow_network=False, client: ExplorerClient = None,
                    max_workers=None):
    """
    Fetch many contracts with bounded parallelism. Returns (records, failures).
    """
    addresses = sorted(set(addresses))
    if allow_network and client is None:
        client = ExplorerClient()

    def fetch(address):
        try:
            return fetch_contract(address, cache_dir, allow_network=allow_network, client=client)
        except FetchError as e:
            print_warning(_('Cannot fetch {address}: {error}').format(address=address, error=e))
            return e

    with ThreadPoolExecutor(max_workers=max_workers or settings.EXPLORER['MAX_WORKERS']) as executor:
        results = list(executor.map(fetch, addresses))

    records = {}
    failures = []
    for result in results:
        if isinstance(result, FetchError):
            failures.append(result)
        else:
            records[result.address] = result

    return records, failures


def resolve_callees(corpus: Corpus, cache_dir, *, allow_network=False, client: ExplorerClient = None) -> Corpus:
    """
    Fill in unresolved callees from the explorer cache, or the explorer itself.
    """
    missing = [diagnostic.detail for diagnostic in corpus.diagnostics if diagnostic.code == UNRESOLVED_CALLEE]
    if not missing:
        return corpus

    records, failures = fetch_contracts(missing, cache_dir, allow_network=allow_network, client=client)
    contracts = dict(corpus.contracts)
    contracts.update(records)
    diagnostics = [diagnostic for diagnostic in corpus.diagnostics
                   if not (diagnostic.code == UNRESOLVED_CALLEE and diagnostic.detail in records)]

    if failures:
        print_warning(_('{count} callees remain unresolved').format(count=len(failures)))

    return Corpus(events=corpus.events, contracts=dict(sorted(contracts.items())), diagnostics=diagnostics)
