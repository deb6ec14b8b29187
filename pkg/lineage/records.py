from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Tuple

from django.core.exceptions import ValidationError
from django.db import models
from django.utils.translation import gettext_lazy as _


class ExclusionReason(models.TextChoices):
    NOT_SAME_CREATOR = 'NOT_SAME_CREATOR', _('Created by another creator')
    OVERLAPPING_WINDOW = 'OVERLAPPING_WINDOW', _('Activity overlaps an earlier version')
    SINGLETON = 'SINGLETON', _('Only version of its proxy')
    UNRESOLVED_METADATA = 'UNRESOLVED_METADATA', _('No contract metadata')


class MatchKind(models.TextChoices):
    EXACT_SIGNATURE = 'EXACT_SIGNATURE', _('Identical signature')
    FUZZY_NAME = 'FUZZY_NAME', _('Similar name')


class Category(models.IntegerChoices):
    NONE = 0, _('None')
    LOW = 1, _('Low')
    MEDIUM = 2, _('Medium')
    HIGH = 3, _('High')

    @classmethod
    def from_name(cls, name):
        try:
            return cls[str(name).upper()]
        except KeyError:
            raise ValidationError(_('Unknown similarity category: {name}').format(name=name),
                                  code='invalid_choice') from None


class ContractScope(models.TextChoices):
    OPEN_SOURCE_ONLY = 'OPEN_SOURCE_ONLY', _('Open-source')
    ALL = 'ALL', _('All contracts')


class LifecycleStatus(models.TextChoices):
    INTRODUCED = 'INTRODUCED', _('Introduced')
    DISAPPEARED = 'DISAPPEARED', _('Disappeared')
    PERSISTED = 'PERSISTED', _('Persisted')


class CombineMode(models.TextChoices):
    UNION = 'UNION', _('Union')
    INTERSECTION = 'INTERSECTION', _('Intersection')


def join_path(directory: str, filename: str) -> str:
    return directory + '/' + filename if directory else filename


@dataclass(frozen=True)
class TraceEvent:
    proxy_address: str
    callee_address: str
    timestamp: int
    block_number: int
    selector: str
    tx_id: str

    @property
    def sort_key(self):
        return (self.block_number, self.tx_id, self.proxy_address, self.callee_address, self.timestamp,
                self.selector)

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class SourceFile:
    directory: str
    filename: str
    content: str

    @property
    def path(self):
        return join_path(self.directory, self.filename)

    @property
    def line_count(self):
        return len(self.content.splitlines())

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class ContractRecord:
    address: str
    creator: str
    deploy_timestamp: int
    verified: bool
    open_source: bool
    files: Tuple[SourceFile, ...] = ()

    def get_file(self, directory, filename) -> Optional[SourceFile]:
        for source_file in self.files:
            if source_file.directory == directory and source_file.filename == filename:
                return source_file
        return None

    def to_dict(self):
        return {
            'address': self.address,
            'creator': self.creator,
            'deploy_timestamp': self.deploy_timestamp,
            'verified': self.verified,
            'open_source': self.open_source,
            'files': [source_file.to_dict() for source_file in self.files],
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            address=data['address'],
            creator=data['creator'],
            deploy_timestamp=data['deploy_timestamp'],
            verified=data['verified'],
            open_source=data['open_source'],
            files=tuple(SourceFile(**item) for item in data.get('files', [])),
        )


@dataclass(frozen=True)
class Diagnostic:
    code: str
    detail: str

    def to_dict(self):
        return asdict(self)


@dataclass
class Corpus:
    events: List[TraceEvent] = field(default_factory=list)
    contracts: Dict[str, ContractRecord] = field(default_factory=dict)
    diagnostics: List[Diagnostic] = field(default_factory=list)

    def proxies(self):
        return sorted({event.proxy_address for event in self.events})

    def observations(self):
        """
        Distinct (proxy, callee) pairs seen in the trace.
        """
        return sorted({(event.proxy_address, event.callee_address) for event in self.events})


@dataclass(frozen=True)
class ActivityWindow:
    first_call: int
    last_call: int


@dataclass(frozen=True)
class LineageVersion:
    address: str
    window: ActivityWindow


@dataclass(frozen=True)
class Lineage:
    proxy: str
    creator: str
    versions: Tuple[LineageVersion, ...]

    def __len__(self):
        return len(self.versions)

    @property
    def addresses(self):
        return [version.address for version in self.versions]

    def to_dict(self):
        return {
            'proxy': self.proxy,
            'creator': self.creator,
            'versions': [{
                'address': version.address,
                'first_call': version.window.first_call,
                'last_call': version.window.last_call,
            } for version in self.versions],
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            proxy=data['proxy'],
            creator=data['creator'],
            versions=tuple(LineageVersion(address=item['address'],
                                          window=ActivityWindow(item['first_call'], item['last_call']))
                           for item in data['versions']),
        )


@dataclass(frozen=True)
class ContractPair:
    proxy: str
    predecessor: str
    successor: str
    gap_days: float
    predecessor_window: ActivityWindow
    successor_window: ActivityWindow

    def to_dict(self):
        return {
            'proxy': self.proxy,
            'predecessor': self.predecessor,
            'successor': self.successor,
            'gap_days': self.gap_days,
            'predecessor_first_call': self.predecessor_window.first_call,
            'predecessor_last_call': self.predecessor_window.last_call,
            'successor_first_call': self.successor_window.first_call,
            'successor_last_call': self.successor_window.last_call,
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            proxy=data['proxy'],
            predecessor=data['predecessor'],
            successor=data['successor'],
            gap_days=data['gap_days'],
            predecessor_window=ActivityWindow(data['predecessor_first_call'], data['predecessor_last_call']),
            successor_window=ActivityWindow(data['successor_first_call'], data['successor_last_call']),
        )


@dataclass(frozen=True)
class Exclusion:
    proxy: str
    callee: str
    reason: ExclusionReason

    def to_dict(self):
        return {'proxy': self.proxy, 'callee': self.callee, 'reason': str(self.reason)}

    @classmethod
    def from_dict(cls, data):
        return cls(proxy=data['proxy'], callee=data['callee'], reason=ExclusionReason(data['reason']))


@dataclass
class LineageDiagnostics:
    exclusions: List[Exclusion] = field(default_factory=list)

    def by_proxy(self):
        result = {}
        for exclusion in self.exclusions:
            result.setdefault(exclusion.proxy, []).append(exclusion)
        return result

    def reasons(self):
        return {(exclusion.proxy, exclusion.callee): exclusion.reason for exclusion in self.exclusions}


@dataclass(frozen=True)
class FilePair:
    proxy: str
    predecessor: str
    successor: str
    directory: str
    predecessor_filename: str
    successor_filename: str
    name_distance: int
    line_similarity: float
    content_similarity: float

    @property
    def predecessor_path(self):
        return join_path(self.directory, self.predecessor_filename)

    @property
    def successor_path(self):
        return join_path(self.directory, self.successor_filename)

    @property
    def identity(self):
        return '{} -> {}'.format(self.predecessor_path, self.successor_path)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        return cls(**data)


@dataclass
class FilePairing:
    pairs: List[FilePair] = field(default_factory=list)
    unpaired_predecessor: List[str] = field(default_factory=list)
    unpaired_successor: List[str] = field(default_factory=list)
    flag: Optional[str] = None


@dataclass(frozen=True)
class FunctionUnit:
    name: str
    signature: str
    body: str
    directory: str
    filename: str
    start_line: int
    end_line: int

    @property
    def ref(self):
        return FunctionRef(name=self.name, signature=self.signature, start_line=self.start_line,
                           end_line=self.end_line)


@dataclass(frozen=True)
class FunctionRef:
    name: str
    signature: str
    start_line: int
    end_line: int


@dataclass(frozen=True)
class FunctionPair:
    proxy: str
    predecessor: str
    successor: str
    directory: str
    predecessor_filename: str
    successor_filename: str
    predecessor_function: FunctionRef
    successor_function: FunctionRef
    match_kind: MatchKind

    def to_dict(self):
        data = asdict(self)
        data['match_kind'] = str(self.match_kind)
        return data

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        data['predecessor_function'] = FunctionRef(**data['predecessor_function'])
        data['successor_function'] = FunctionRef(**data['successor_function'])
        data['match_kind'] = MatchKind(data['match_kind'])
        return cls(**data)


@dataclass
class FunctionPairing:
    pairs: List[FunctionPair] = field(default_factory=list)
    unpaired_predecessor: List[FunctionRef] = field(default_factory=list)
    unpaired_successor: List[FunctionRef] = field(default_factory=list)


@dataclass(frozen=True)
class Fingerprint:
    address: str
    k: int
    seed: int
    signature: Tuple[int, ...]
    shingle_count: int

    @property
    def is_sentinel(self):
        return self.shingle_count == 0


@dataclass(frozen=True)
class SimilarityVerdict:
    first: str
    second: str
    estimated_jaccard: float
    category: Category


@dataclass(frozen=True)
class ScenarioResult:
    contract_scope: ContractScope
    threshold: Category
    precision: Optional[float]
    recall: Optional[float]
    tp: int
    fp: int
    fn: int


@dataclass(frozen=True)
class Finding:
    tool: str
    vuln_type: str
    contract: str
    directory: str
    filename: str
    start_line: int
    end_line: int
    message: str

    @property
    def path(self):
        return join_path(self.directory, self.filename)


@dataclass(frozen=True, order=True)
class FindingKey:
    tool: str
    vuln_type: str
    file: str


@dataclass(frozen=True)
class LifecycleRecord:
    proxy: str
    key: FindingKey
    status: LifecycleStatus
    predecessor: str
    successor: str
    days_to_disappear: Optional[float] = None

    def to_dict(self):
        return {
            'proxy': self.proxy,
            'tool': self.key.tool,
            'vuln_type': self.key.vuln_type,
            'file': self.key.file,
            'status': str(self.status),
            'predecessor': self.predecessor,
            'successor': self.successor,
            'days_to_disappear': self.days_to_disappear,
        }
