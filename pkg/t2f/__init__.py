"""
text2face desk laboratory.

Attribute → caption compilation, a text-conditional DC-GAN trained with the
matching-aware GAN-CLS objective, and an inception-score evaluator.
"""

__version__ = "0.1.0"
