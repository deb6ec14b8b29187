from collections import defaultdict
from typing import Iterable, List, NamedTuple

from django.conf import settings
from django.utils.translation import gettext as _

from generic.utils import print_debug, print_warning
from lineage.records import (ContractPair, ContractRecord, Corpus, Diagnostic, FilePair, FilePairing, FunctionPair,
                             FunctionPairing, FunctionUnit, MatchKind, SourceFile)
from lineage.utils.lexer import IDENT, PUNCT, tokenize
from lineage.utils.sequences import edit_distance, lcs_ratio

NOT_OPEN_SOURCE = 'NOT_OPEN_SOURCE'
UNRESOLVED_METADATA = 'UNRESOLVED_METADATA'
UNBALANCED_BRACES = 'UNBALANCED_BRACES'

CONTAINER_KEYWORDS = {'contract', 'library', 'interface'}
PARAMETER_QUALIFIERS = {'memory', 'storage', 'calldata', 'payable', 'indexed'}


def line_similarity(pred_content: str, succ_content: str) -> float:
    return lcs_ratio(pred_content.splitlines(), succ_content.splitlines())


def content_similarity(pred_content: str, succ_content: str) -> float:
    return lcs_ratio(pred_content, succ_content)


def pair_files(pred: ContractRecord, succ: ContractRecord, *, proxy='') -> FilePairing:
    """
    Pair files of two contract versions by filename within each shared directory.

    Candidates are matched greedily by ascending edit distance, ties broken by
    predecessor then successor filename. Every file is used at most once.
    """
    if not (pred.open_source and succ.open_source):
        return FilePairing(flag=NOT_OPEN_SOURCE)

    max_distance = settings.PAIRING['FILENAME_MAX_DISTANCE']

    pred_dirs = defaultdict(dict)
    for source_file in pred.files:
        pred_dirs[source_file.directory][source_file.filename] = source_file
    succ_dirs = defaultdict(dict)
    for source_file in succ.files:
        succ_dirs[source_file.directory][source_file.filename] = source_file

    pairs = []
    paired_pred = set()
    paired_succ = set()
    for directory in sorted(pred_dirs.keys() & succ_dirs.keys()):
        candidates = []
        for pred_name in pred_dirs[directory]:
            for succ_name in succ_dirs[directory]:
                distance = edit_distance(pred_name, succ_name)
                if distance <= max_distance:
                    candidates.append((distance, pred_name, succ_name))

        used_pred = set()
        used_succ = set()
        for distance, pred_name, succ_name in sorted(candidates):
            if pred_name in used_pred or succ_name in used_succ:
                continue
            used_pred.add(pred_name)
            used_succ.add(succ_name)

            pred_content = pred_dirs[directory][pred_name].content
            succ_content = succ_dirs[directory][succ_name].content
            pairs.append(FilePair(
                proxy=proxy,
                predecessor=pred.address,
                successor=succ.address,
                directory=directory,
                predecessor_filename=pred_name,
                successor_filename=succ_name,
                name_distance=distance,
                line_similarity=line_similarity(pred_content, succ_content),
                content_similarity=content_similarity(pred_content, succ_content),
            ))

        paired_pred.update((directory, name) for name in used_pred)
        paired_succ.update((directory, name) for name in used_succ)

    pairs.sort(key=lambda pair: (pair.directory, pair.predecessor_filename, pair.successor_filename))
    return FilePairing(
        pairs=pairs,
        unpaired_predecessor=sorted(f.path for f in pred.files if (f.directory, f.filename) not in paired_pred),
        unpaired_successor=sorted(f.path for f in succ.files if (f.directory, f.filename) not in paired_succ),
    )


def _split_parameters(tokens):
    parameters = [[]]
    depth = 0
    for token in tokens:
        if token.text in ('(', '['):
            depth += 1
        elif token.text in (')', ']'):
            depth -= 1
        elif token.text == ',' and depth == 0:
            parameters.append([])
            continue
        parameters[-1].append(token)

    return [parameter for parameter in parameters if parameter]


def canonical_type(parameter) -> str:
    """
    `uint256[] memory values` -> `uint256[]`
    """
    texts = [token.text for token in parameter if token.text not in PARAMETER_QUALIFIERS]
    kinds = [token.kind for token in parameter if token.text not in PARAMETER_QUALIFIERS]
    if len(texts) > 1 and kinds[-1] == IDENT and texts[-2] != '.':
        texts = texts[:-1]
    return ''.join(texts)


def _matching_close(tokens, index, opening, closing):
    depth = 0
    for position in range(index, len(tokens)):
        if tokens[position].kind != PUNCT:
            continue
        if tokens[position].text == opening:
            depth += 1
        elif tokens[position].text == closing:
            depth -= 1
            if depth == 0:
                return position
    return None


def _parse_function(source_file: SourceFile, tokens, index, diagnostics):
    """
    Parse the declaration starting at tokens[index] ('function').

    Returns (unit or None, index to resume at).
    """
    position = index + 1
    if position < len(tokens) and tokens[position].kind == IDENT:
        name = tokens[position].text
        position += 1
    else:
        name = 'fallback'

    if position >= len(tokens) or tokens[position].text != '(':
        return None, index + 1

    close = _matching_close(tokens, position, '(', ')')
    if close is None:
        close = len(tokens) - 1
    types = [canonical_type(parameter) for parameter in _split_parameters(tokens[position + 1:close])]
    signature = '{name}({types})'.format(name=name, types=','.join(types))

    # Modifiers and returns clauses may hold parentheses, skip to the body or ';'
    depth = 0
    position = close + 1
    end = None
    partial = False
    while position < len(tokens):
        text = tokens[position].text
        if text == '(':
            depth += 1
        elif text == ')':
            depth -= 1
        elif depth == 0 and text == ';':
            end = position
            break
        elif depth == 0 and text == '{':
            end = _matching_close(tokens, position, '{', '}')
            if end is None:
                end = len(tokens) - 1
                partial = True
            break
        position += 1
    else:
        end = len(tokens) - 1
        partial = True

    if partial and diagnostics is not None:
        diagnostics.append(Diagnostic(UNBALANCED_BRACES, _('{path}: function {name} is not closed').format(
            path=source_file.path, name=name)))

    # An unnamed declaration without a body is a function type, not a function
    if name == 'fallback' and tokens[end].text == ';':
        return None, end + 1

    unit = FunctionUnit(
        name=name,
        signature=signature,
        body=source_file.content[tokens[index].start:tokens[end].end],
        directory=source_file.directory,
        filename=source_file.filename,
        start_line=tokens[index].line,
        end_line=tokens[end].line,
    )
    return unit, end + 1


def extract_functions(source_file: SourceFile, diagnostics: List[Diagnostic] = None) -> List[FunctionUnit]:
    """
    Function declarations directly inside contract, library and interface bodies.

    Unbalanced braces at the end of the file give a partial result, reported
    in `diagnostics` when a list is passed.
    """
    tokens = tokenize(source_file.content)
    units = []
    scopes = []
    pending_container = False
    parens = 0
    index = 0
    while index < len(tokens):
        token = tokens[index]

        if token.kind == IDENT:
            if token.text in CONTAINER_KEYWORDS and not scopes:
                pending_container = True
            elif token.text == 'function' and scopes == ['container'] and parens == 0:
                unit, index = _parse_function(source_file, tokens, index, diagnostics)
                if unit:
                    units.append(unit)
                continue

        elif token.kind == PUNCT:
            if token.text == '{':
                scopes.append('container' if pending_container else 'block')
                pending_container = False
                parens = 0
            elif token.text == '}':
                if scopes:
                    scopes.pop()
            elif token.text == '(':
                parens += 1
            elif token.text == ')':
                parens = max(0, parens - 1)

        index += 1

    if scopes and diagnostics is not None:
        diagnostics.append(Diagnostic(UNBALANCED_BRACES, _('{path}: {count} unclosed braces at end of file').format(
            path=source_file.path, count=len(scopes))))

    return units


def pair_functions(file_pair: FilePair, pred_units: List[FunctionUnit],
                   succ_units: List[FunctionUnit]) -> FunctionPairing:
    """
    One-to-one matching of functions across a file pair.

    Identical signatures pair first, in declaration order. The remaining
    functions pair by name edit distance, smallest distance first.
    """
    max_distance = settings.PAIRING['FUNCTION_NAME_MAX_DISTANCE']
    pred_units = sorted(pred_units, key=lambda unit: (unit.start_line, unit.signature))
    succ_units = sorted(succ_units, key=lambda unit: (unit.start_line, unit.signature))

    matches = []
    used_pred = set()
    used_succ = set()

    by_signature = defaultdict(lambda: ([], []))
    for position, unit in enumerate(pred_units):
        by_signature[unit.signature][0].append(position)
    for position, unit in enumerate(succ_units):
        by_signature[unit.signature][1].append(position)

    for signature in sorted(by_signature):
        pred_positions, succ_positions = by_signature[signature]
        for pred_position, succ_position in zip(pred_positions, succ_positions):
            matches.append((pred_position, succ_position, MatchKind.EXACT_SIGNATURE))
            used_pred.add(pred_position)
            used_succ.add(succ_position)

    candidates = []
    for pred_position, pred_unit in enumerate(pred_units):
        if pred_position in used_pred:
            continue
        for succ_position, succ_unit in enumerate(succ_units):
            if succ_position in used_succ:
                continue
            distance = edit_distance(pred_unit.name, succ_unit.name)
            if distance <= max_distance:
                candidates.append((distance, pred_unit.name, succ_unit.name, pred_unit.start_line,
                                   succ_unit.start_line, pred_position, succ_position))

    for *_ignored, pred_position, succ_position in sorted(candidates):
        if pred_position in used_pred or succ_position in used_succ:
            continue
        matches.append((pred_position, succ_position, MatchKind.FUZZY_NAME))
        used_pred.add(pred_position)
        used_succ.add(succ_position)

    matches.sort()
    return FunctionPairing(
        pairs=[FunctionPair(
            proxy=file_pair.proxy,
            predecessor=file_pair.predecessor,
            successor=file_pair.successor,
            directory=file_pair.directory,
            predecessor_filename=file_pair.predecessor_filename,
            successor_filename=file_pair.successor_filename,
            predecessor_function=pred_units[pred_position].ref,
            successor_function=succ_units[succ_position].ref,
            match_kind=match_kind,
        ) for pred_position, succ_position, match_kind in matches],
        unpaired_predecessor=[unit.ref for position, unit in enumerate(pred_units) if position not in used_pred],
        unpaired_successor=[unit.ref for position, unit in enumerate(succ_units) if position not in used_succ],
    )


class PairingResult(NamedTuple):
    file_pairs: List[FilePair]
    function_pairs: List[FunctionPair]
    diagnostics: List[Diagnostic]


def pair_contracts(corpus: Corpus, pairs: Iterable[ContractPair]) -> PairingResult:
    """
    File and function pairing over every predecessor/successor contract pair.
    """
    file_pairs = []
    function_pairs = []
    diagnostics = []
    extracted = {}

    def units_of(record: ContractRecord, directory, filename):
        key = (record.address, directory, filename)
        if key not in extracted:
            extracted[key] = extract_functions(record.get_file(directory, filename), diagnostics)
        return extracted[key]

    for pair in pairs:
        pred = corpus.contracts.get(pair.predecessor)
        succ = corpus.contracts.get(pair.successor)
        if pred is None or succ is None:
            diagnostics.append(Diagnostic(UNRESOLVED_METADATA, '{} -> {}'.format(pair.predecessor, pair.successor)))
            continue

        pairing = pair_files(pred, succ, proxy=pair.proxy)
        if pairing.flag:
            diagnostics.append(Diagnostic(pairing.flag, '{} -> {}'.format(pair.predecessor, pair.successor)))
            continue

        for file_pair in pairing.pairs:
            function_pairing = pair_functions(
                file_pair,
                units_of(pred, file_pair.directory, file_pair.predecessor_filename),
                units_of(succ, file_pair.directory, file_pair.successor_filename),
            )
            function_pairs.extend(function_pairing.pairs)

        file_pairs.extend(pairing.pairs)

    unbalanced = [diagnostic for diagnostic in diagnostics if diagnostic.code == UNBALANCED_BRACES]
    if unbalanced:
        print_warning(_('{count} files have unbalanced braces').format(count=len(unbalanced)))

    print_debug(_('Paired {files} files and {functions} functions').format(files=len(file_pairs),
                                                                          functions=len(function_pairs)))
    return PairingResult(file_pairs=file_pairs, function_pairs=function_pairs, diagnostics=diagnostics)
