from better_exceptions import hook

__version__ = '0.1.0'

hook()
