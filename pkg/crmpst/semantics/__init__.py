from . import global_lts
from . import config_lts
from . import session
