from .commands import commands, main
from .benchmark import cmd_benchmark
from .fit import cmd_fit
from .gradcheck import cmd_gradcheck
from .reproduce import cmd_reproduce
from .simulate import cmd_simulate
