"""touchlab: a desk-scale continual reinforcement learning laboratory.

A touchscreen-style environment streams images and rewards; agents learn
per-pixel reward maps online, act through a variance-seeking sampling policy,
and reuse frozen modules across task switches through a voting meta-controller.
"""

__version__ = "0.1.0"
