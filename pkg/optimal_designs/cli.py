"""
``optdes`` console script: the ``optimal_design`` management command without a host project.
"""

import os
import sys

STANDALONE_APPS = (
    'django.contrib.auth',
    'django.contrib.contenttypes',
    'super_csv',
    'optimal_designs',
)


class _PluginSettings:
    """
    Collects what the plugin settings modules inject.
    """


def configure():
    """
    Configure Django from the plugin defaults unless a settings module is given.
    """
    import django  # pylint: disable=import-outside-toplevel
    from django.conf import settings  # pylint: disable=import-outside-toplevel

    from optimal_designs.settings import common  # pylint: disable=import-outside-toplevel

    if not settings.configured and not os.environ.get('DJANGO_SETTINGS_MODULE'):
        plugin = _PluginSettings()
        common.plugin_settings(plugin)
        settings.configure(
            INSTALLED_APPS=STANDALONE_APPS,
            DATABASES={'default': {'ENGINE': 'django.db.backends.sqlite3', 'NAME': ':memory:'}},
            OPTIMAL_DESIGNS=plugin.OPTIMAL_DESIGNS,
            LOGGING={
                'version': 1,
                'disable_existing_loggers': False,
                'handlers': {'console': {'class': 'logging.StreamHandler'}},
                'loggers': {'optimal_designs': {'handlers': ['console'], 'level': 'INFO'}},
            },
        )
    django.setup()


def main(argv=None):
    configure()
    from optimal_designs.management.commands.optimal_design import Command  # pylint: disable=import-outside-toplevel

    argv = list(sys.argv[1:] if argv is None else argv)
    Command().run_from_argv(['optdes', 'optimal_design'] + argv)


if __name__ == '__main__':
    main()
