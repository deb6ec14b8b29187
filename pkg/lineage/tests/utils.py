import itertools
import os
import random
from typing import Dict, List

from lineage.ingest import canonicalize_events
from lineage.records import ContractRecord, Corpus, ExclusionReason, SourceFile, TraceEvent

FIXTURES = os.path.join(os.path.dirname(__file__), 'fixtures')

TRANSFER = '0xa9059cbb'
UPGRADE_TO = '0x3659cfe6'


def fixture(*parts):
    return os.path.join(FIXTURES, *parts)


def address(number: int) -> str:
    return '0x{:040x}'.format(number)


def make_event(proxy, callee, timestamp, *, block=None, tx_id=None, selector=TRANSFER):
    return TraceEvent(
        proxy_address=proxy,
        callee_address=callee,
        timestamp=timestamp,
        block_number=timestamp if block is None else block,
        selector=selector,
        tx_id=tx_id or 'tx-{}-{}-{}'.format(proxy[-4:], callee[-4:], timestamp),
    )


def make_contract(contract, creator, files=None, *, deploy_timestamp=0, verified=None):
    files = tuple(files or ())
    return ContractRecord(
        address=contract,
        creator=creator,
        deploy_timestamp=deploy_timestamp,
        verified=bool(files) if verified is None else verified,
        open_source=bool(files),
        files=files,
    )


def sol(filename, content='', directory=''):
    return SourceFile(directory=directory, filename=filename, content=content)


def make_corpus(events, contracts) -> Corpus:
    return Corpus(events=canonicalize_events(events),
                  contracts={record.address: record for record in sorted(contracts, key=lambda r: r.address)})


def random_corpus(rng: random.Random, *, max_proxies=50, max_contracts=200, max_callees=7) -> Corpus:
    """
    Proxies with random callees, creators and windows. Windows are drawn from a
    small range so overlaps and touching windows are frequent.
    """
    creators = [address(0xC000 + index) for index in range(rng.randint(1, 4))]
    contracts = [address(0xA000 + index) for index in range(rng.randint(1, max_contracts))]
    records = {}
    events = []

    for proxy_index in range(rng.randint(1, max_proxies)):
        proxy = address(0xB000 + proxy_index)
        callees = rng.sample(contracts, min(len(contracts), rng.randint(1, max_callees)))
        for callee in callees:
            start = rng.randint(0, 60)
            end = start + rng.choice([0, 0, 1, 2, 5, 10, 20])
            timestamps = {start, end} | {rng.randint(start, end) for _i in range(rng.randint(0, 2))}
            for timestamp in sorted(timestamps):
                events.append(make_event(proxy, callee, timestamp, tx_id='tx-{}-{}'.format(proxy_index, timestamp)))

            # Some callees stay without metadata
            if callee not in records and rng.random() > 0.1:
                records[callee] = make_contract(callee, rng.choice(creators))

    rng.shuffle(events)
    return make_corpus(events, records.values())


def brute_force_lineages(corpus: Corpus):
    """
    Rules checked directly on every subset of each proxy's chosen creator group.

    Returns ({proxy: (creator, [addresses])}, {(proxy, callee): reason}).
    """
    windows = {}
    for event in corpus.events:
        key = (event.proxy_address, event.callee_address)
        times = windows.setdefault(key, [])
        times.append(event.timestamp)
    windows = {key: (min(times), max(times)) for key, times in windows.items()}

    lineages = {}
    reasons = {}
    for proxy in sorted({proxy for proxy, _callee in windows}):
        callees = {callee: window for (p, callee), window in windows.items() if p == proxy}

        groups = {}
        for callee in callees:
            if callee not in corpus.contracts:
                reasons[(proxy, callee)] = ExclusionReason.UNRESOLVED_METADATA
            else:
                groups.setdefault(corpus.contracts[callee].creator, []).append(callee)

        if not groups:
            continue

        ranked = sorted(groups.items(), key=lambda item: (-len(item[1]), min(callees[c][0] for c in item[1]), item[0]))
        creator, group = ranked[0]
        for other_creator, others in ranked[1:]:
            for callee in others:
                reasons[(proxy, callee)] = ExclusionReason.NOT_SAME_CREATOR

        order = sorted(group, key=lambda callee: (callees[callee][0], callee))
        chains = [chain for chain in _subsets(order) if _is_chain(chain, callees) and _is_greedy(chain, order, callees)]
        assert len(chains) == 1, chains
        chain = chains[0]

        for callee in order:
            if callee not in chain:
                reasons[(proxy, callee)] = ExclusionReason.OVERLAPPING_WINDOW

        if len(chain) >= 2:
            lineages[proxy] = (creator, list(chain))
        else:
            for callee in chain:
                reasons[(proxy, callee)] = ExclusionReason.SINGLETON

    return lineages, reasons


def _subsets(order):
    for size in range(len(order) + 1):
        yield from itertools.combinations(order, size)


def _is_chain(chain, windows):
    return all(windows[a][1] < windows[b][0] for a, b in zip(chain, chain[1:]))


def _is_greedy(chain, order, windows):
    """
    The first candidate is always kept and every dropped candidate overlaps the
    last kept version before it.
    """
    if order and (not chain or chain[0] != order[0]):
        return False

    for position, callee in enumerate(order):
        if callee in chain:
            continue
        before = [kept for kept in chain if order.index(kept) < position]
        if not before or windows[callee][0] > windows[before[-1]][1]:
            return False
    return True


def lcs_oracle(first, second) -> int:
    previous = [0] * (len(second) + 1)
    for item in first:
        current = [0]
        for column, other in enumerate(second, start=1):
            current.append(previous[column - 1] + 1 if item == other else max(previous[column], current[-1]))
        previous = current
    return previous[-1]


def prefix_signature(family: int, member: int, shared: int, k=256) -> tuple:
    """
    A signature whose first `shared` slots belong to the family and the rest to the member.
    """
    return tuple((family << 32) + slot if slot < shared else (family << 48) + (member << 16) + slot
                 for slot in range(k))


def jaccard(first, second) -> float:
    first, second = set(first), set(second)
    union = first | second
    return len(first & second) / len(union) if union else 1.0


def count_decisions(members: Dict[str, set], predictions: Dict[str, set]) -> List[int]:
    tp = fp = fn = 0
    for query, truth in members.items():
        predicted = predictions.get(query, set())
        for candidate in predicted | truth:
            if candidate in predicted and candidate in truth:
                tp += 1
            elif candidate in predicted:
                fp += 1
            else:
                fn += 1
    return [tp, fp, fn]
