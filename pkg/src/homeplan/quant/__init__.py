from homeplan.quant.nf4 import (
    BLOCK_SIZE,
    GROUP_SIZE,
    NonFiniteInput,
    QuantizedTensor,
    bits_per_element,
    double_dequant,
    nf4_codebook,
    quantize_nf4,
)
from homeplan.quant.qlora import DimensionMismatch, LoraAdapter, adapter_gradients, qlora_forward

__all__ = [
    "BLOCK_SIZE",
    "GROUP_SIZE",
    "DimensionMismatch",
    "LoraAdapter",
    "NonFiniteInput",
    "QuantizedTensor",
    "adapter_gradients",
    "bits_per_element",
    "double_dequant",
    "nf4_codebook",
    "qlora_forward",
    "quantize_nf4",
]
