"""
Lineage classification.

A lineage is the chain of implementation contracts a proxy delegated to over
time. A callee belongs to its proxy's lineage when the proxy called it, when
it shares the lineage creator and when its activity window does not overlap
the previous version. A lineage needs at least two versions.
"""

from collections import defaultdict
from typing import Dict, Iterable, List, Optional, Tuple

from django.utils.translation import gettext as _

from generic.utils import print_debug
from lineage.records import (ActivityWindow, ContractPair, Corpus, Exclusion, ExclusionReason, Lineage,
                             LineageDiagnostics, LineageVersion)

SECONDS_PER_DAY = 86400


def activity_windows(corpus: Corpus) -> Dict[Tuple[str, str], ActivityWindow]:
    """
    First and last delegatecall timestamp for every (proxy, callee).
    """
    bounds = {}
    for event in corpus.events:
        key = (event.proxy_address, event.callee_address)
        if key in bounds:
            first, last = bounds[key]
            bounds[key] = (min(first, event.timestamp), max(last, event.timestamp))
        else:
            bounds[key] = (event.timestamp, event.timestamp)

    return {key: ActivityWindow(first, last) for key, (first, last) in sorted(bounds.items())}


def select_creator(groups: Dict[str, List[str]], windows: Dict[str, ActivityWindow]) -> Optional[str]:
    """
    The creator group that wins a proxy: most callees, then earliest first call, then lowest address.
    """
    if not groups:
        return None

    return min(groups, key=lambda creator: (
        -len(groups[creator]),
        min(windows[callee].first_call for callee in groups[creator]),
        creator,
    ))


def classify_proxy(proxy: str, windows: Dict[str, ActivityWindow], contracts, *, same_creator=True):
    exclusions = []

    resolved = {}
    for callee in sorted(windows):
        record = contracts.get(callee)
        if record is None:
            exclusions.append(Exclusion(proxy, callee, ExclusionReason.UNRESOLVED_METADATA))
        else:
            resolved[callee] = record.creator

    if same_creator:
        groups = defaultdict(list)
        for callee, callee_creator in resolved.items():
            groups[callee_creator].append(callee)

        creator = select_creator(groups, windows)
        members = groups.get(creator, [])
        for callee, callee_creator in resolved.items():
            if callee_creator != creator:
                exclusions.append(Exclusion(proxy, callee, ExclusionReason.NOT_SAME_CREATOR))
    else:
        creator = None
        members = list(resolved)

    kept = []
    for callee in sorted(members, key=lambda address: (windows[address].first_call, address)):
        # Windows must be strictly disjoint, touching windows overlap
        if kept and windows[callee].first_call <= windows[kept[-1]].last_call:
            exclusions.append(Exclusion(proxy, callee, ExclusionReason.OVERLAPPING_WINDOW))
        else:
            kept.append(callee)

    if len(kept) < 2:
        exclusions.extend(Exclusion(proxy, callee, ExclusionReason.SINGLETON) for callee in kept)
        return None, exclusions

    lineage = Lineage(
        proxy=proxy,
        creator=creator if creator is not None else resolved[kept[0]],
        versions=tuple(LineageVersion(address=callee, window=windows[callee]) for callee in kept),
    )
    return lineage, exclusions


def build_lineages(corpus: Corpus, *, same_creator=True,
                   proxies: Iterable[str] = None) -> Tuple[List[Lineage], LineageDiagnostics]:
    """
    Classify every callee of every proxy into a lineage or a diagnosed exclusion.

    `same_creator=False` drops the creator rule, the lineage creator is then the
    creator of its first version. `proxies` restricts classification to a subset.
    """
    by_proxy = defaultdict(dict)
    for (proxy, callee), window in activity_windows(corpus).items():
        by_proxy[proxy][callee] = window

    if proxies is not None:
        proxies = set(proxies)

    lineages = []
    exclusions = []
    for proxy in sorted(by_proxy):
        if proxies is not None and proxy not in proxies:
            continue

        lineage, excluded = classify_proxy(proxy, by_proxy[proxy], corpus.contracts, same_creator=same_creator)
        if lineage:
            lineages.append(lineage)
        exclusions.extend(excluded)

    exclusions.sort(key=lambda exclusion: (exclusion.proxy, exclusion.callee))
    print_debug(_('Built {lineages} lineages, excluded {exclusions} callees').format(lineages=len(lineages),
                                                                                    exclusions=len(exclusions)))
    return lineages, LineageDiagnostics(exclusions=exclusions)


def contract_pairs(lineages: Iterable[Lineage]) -> List[ContractPair]:
    pairs = []
    for lineage in lineages:
        for predecessor, successor in zip(lineage.versions, lineage.versions[1:]):
            pairs.append(ContractPair(
                proxy=lineage.proxy,
                predecessor=predecessor.address,
                successor=successor.address,
                gap_days=(successor.window.first_call - predecessor.window.last_call) / SECONDS_PER_DAY,
                predecessor_window=predecessor.window,
                successor_window=successor.window,
            ))

    return pairs
