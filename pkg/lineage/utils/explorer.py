import threading
import time

import backoff
from django.conf import settings
from django.core.exceptions import ImproperlyConfigured
from django.utils.translation import gettext as _
from requests import RequestException, Session

from generic.utils import print_debug, print_warning


def raise_exception_on_fail(response, *_args, **_kwargs):
    if response.status_code >= 400:
        raise RequestException(response.reason, response=response)


# Status 0 replies that report an empty result rather than a failed request
EMPTY_RESULT_MESSAGES = ('not verified', 'no data found', 'no records found')


def raise_exception_on_error_status(response, *_args, **_kwargs):
    # The explorer answers HTTP 200 with status 0 on throttling, timeouts and key errors
    try:
        data = response.json()
    except ValueError:
        raise RequestException(_('Explorer returned invalid JSON'), response=response) from None

    if str(data.get('status')) != '0':
        return

    reply = '{} {}'.format(data.get('message', ''), data.get('result', '')).lower()
    if not any(message in reply for message in EMPTY_RESULT_MESSAGES):
        raise RequestException(str(data.get('result') or data.get('message')), response=response)


def get_explorer_session():
    session = Session()
    session.hooks = {
        'response': [raise_exception_on_fail, raise_exception_on_error_status]
    }

    return session


class RateLimiter:
    """
    Spaces calls at least 1/rate seconds apart, across threads.
    """

    def __init__(self, rate: float, clock=time.monotonic, sleep=time.sleep):
        self.interval = 1.0 / rate if rate else 0.0
        self.clock = clock
        self.sleep = sleep
        self._lock = threading.Lock()
        self._next_slot = None

    def wait(self):
        with self._lock:
            now = self.clock()
            slot = now if self._next_slot is None else max(now, self._next_slot)
            self._next_slot = slot + self.interval

        if slot > now:
            self.sleep(slot - now)


class ExplorerClient:
    def __init__(self, *, url=None, api_key=None, rate_limit=None, max_retries=None, backoff_base=None, timeout=None,
                 session: Session = None):
        config = settings.EXPLORER
        self.url = url or config['URL']
        self.api_key = api_key or config.get('API_KEY')
        self.timeout = timeout or config['TIMEOUT']
        self.session = session or get_explorer_session()
        self.limiter = RateLimiter(rate_limit or config['RATE_LIMIT'])

        if not self.api_key:
            raise ImproperlyConfigured(_('No explorer API key configured, set ETHERSCAN_API_KEY'))

        retries = config['MAX_RETRIES'] if max_retries is None else max_retries
        self._get = backoff.on_exception(backoff.expo,
                                         RequestException,
                                         max_tries=retries + 1,
                                         factor=config['BACKOFF_BASE'] if backoff_base is None else backoff_base,
                                         jitter=None,
                                         on_backoff=self._on_backoff)(self._request)

    @staticmethod
    def _on_backoff(details):
        print_warning(_('Explorer request failed, retry {tries} in {wait:.1f}s').format(**details))

    def _request(self, params):
        self.limiter.wait()
        print_debug(_('Explorer {module}/{action} {address}').format(
            module=params['module'], action=params['action'],
            address=params.get('address', params.get('contractaddresses', ''))
        ))
        response = self.session.get(self.url, params=dict(params, apikey=self.api_key), timeout=self.timeout)
        return response.json()

    def get_source(self, address: str):
        data = self._get({
            'module': 'contract',
            'action': 'getsourcecode',
            'address': address,
        })
        result = data.get('result') or []
        return result[0] if isinstance(result, list) and result else {}

    def get_creation(self, address: str):
        data = self._get({
            'module': 'contract',
            'action': 'getcontractcreation',
            'contractaddresses': address,
        })
        result = data.get('result') or []
        return result[0] if isinstance(result, list) and result else {}
