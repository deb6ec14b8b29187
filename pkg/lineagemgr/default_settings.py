"""
Django settings for the lineagemgr project.

The project has no web surface: Django provides the settings layer, the
management commands and the test runner for the lineage mining pipeline.

For the full list of settings and their values, see
https://docs.djangoproject.com/en/4.2/ref/settings/
"""

import os

# Turn off debugging by default
DEBUG = False

# Build paths inside the project like this: os.path.join(BASE_DIR, ...)
BASE_DIR = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))

SECRET_KEY = os.environ.get('DJANGO_SECRET_KEY', 'lineagemgr-offline-pipeline')

# Block explorer settings
EXPLORER = {
    'URL': 'https://api.etherscan.io/api',
    'API_KEY': os.environ.get('ETHERSCAN_API_KEY'),
    'RATE_LIMIT': 4,
    'MAX_RETRIES': 5,
    'BACKOFF_BASE': 1,
    'TIMEOUT': 30,
    'MAX_WORKERS': 4,
}

# Functions whose selectors mark an upgrade call in the trace data
UPGRADE_SIGNATURES = [
    'upgradeTo(address)',
    'upgradeToAndCall(address,bytes)',
]

PAIRING = {
    'FILENAME_MAX_DISTANCE': 2,
    'FUNCTION_NAME_MAX_DISTANCE': 2,
}

FINGERPRINT = {
    'K': 256,
    'SEED': 0,
    'SHINGLE_SIZE': 5,
    'BANDS': 64,
    'ROWS': 4,
}

SIMILARITY_THRESHOLDS = {
    'HIGH': 0.90,
    'MEDIUM': 0.70,
    'LOW': 0.50,
}

# Tool specific vulnerability type -> common category, used to intersect tool results
CATEGORY_MAP = {
    'slither': {
        'reentrancy-eth': 'reentrancy',
        'reentrancy-no-eth': 'reentrancy',
        'reentrancy-benign': 'reentrancy',
        'reentrancy-events': 'reentrancy',
        'reentrancy-unlimited-gas': 'reentrancy',
        'tx-origin': 'tx-origin',
        'unchecked-lowlevel': 'unchecked-call',
        'unchecked-send': 'unchecked-call',
        'unchecked-transfer': 'unchecked-call',
    },
    'mythril': {
        'SWC-107': 'reentrancy',
        'SWC-115': 'tx-origin',
        'SWC-104': 'unchecked-call',
    },
    'conkas': {
        'Reentrancy': 'reentrancy',
        'Unchecked Low Level Call': 'unchecked-call',
    },
}

DATASET_VERSION = '1.0'

# Application definition
INSTALLED_APPS = [
    'generic',
    'lineage',
]

# The pipeline works on files, not on a database
DATABASES = {}

# Internationalization
# https://docs.djangoproject.com/en/4.2/topics/i18n/
LANGUAGE_CODE = 'en-us'
TIME_ZONE = 'UTC'
USE_I18N = True
USE_TZ = True
