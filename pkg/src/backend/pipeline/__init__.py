"""
Pipeline package: run configuration, subcommand orchestration and the CLI.
"""

from .config import PACKAGE_VERSION, PipelineConfig, RunConfig

def run_command(*args, **kwargs):
    from .orchestrator import run_command as _impl
    return _impl(*args, **kwargs)

def cmd_estimate(*args, **kwargs):
    from .orchestrator import cmd_estimate as _impl
    return _impl(*args, **kwargs)

def cmd_simulate(*args, **kwargs):
    from .orchestrator import cmd_simulate as _impl
    return _impl(*args, **kwargs)

def cmd_overlap(*args, **kwargs):
    from .orchestrator import cmd_overlap as _impl
    return _impl(*args, **kwargs)

def cmd_sensitivity(*args, **kwargs):
    from .orchestrator import cmd_sensitivity as _impl
    return _impl(*args, **kwargs)

def cmd_synth(*args, **kwargs):
    from .orchestrator import cmd_synth as _impl
    return _impl(*args, **kwargs)

__all__ = [
    'run_command',
    'cmd_estimate',
    'cmd_simulate',
    'cmd_overlap',
    'cmd_sensitivity',
    'cmd_synth',
    'PipelineConfig',
    'RunConfig',
    'PACKAGE_VERSION',
]
