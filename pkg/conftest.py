import os

import django

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'lineagemgr.settings')
django.setup()
