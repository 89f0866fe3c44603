"""
Container class for loading the simulator's process configuration.
"""
import dataclasses
import os

import marshmallow_dataclass


@dataclasses.dataclass
class Config:
    output_root: str
    log_level: str
    svg_width: int
    converge_task_retries: int


ConfigSchema = marshmallow_dataclass.class_schema(Config)

__config = {
    "output_root": os.getenv('MCM_OUTPUT_ROOT', './runs'),
    "log_level": os.getenv('MCM_LOG_LEVEL', 'INFO'),
    "svg_width": os.getenv('MCM_SVG_WIDTH', 800),
    "converge_task_retries": os.getenv('MCM_CONVERGE_TASK_RETRIES', 0)
}
config: Config = ConfigSchema().load(__config)
