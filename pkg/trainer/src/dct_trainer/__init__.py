"""dct-trainer: parameter-efficient fine-tuning over dct dataset files."""

from .config import EPOCH_PRESETS, ConfigError, TrainerConfig, config_from_dict, config_from_file
from .data import DataError, Record, load_records
from .lora import LoRALinear, adapter_state_dict, apply_adapters, load_adapter, save_adapter
from .model import TinyCausalLM, build_base, save_base
from .train import TrainResult, train

__version__ = "0.1.0"
