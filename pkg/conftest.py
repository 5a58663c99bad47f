import os

import django

os.environ.setdefault("DJANGO_SETTINGS_MODULE", "patdrift.settings")
django.setup()
