"""
CelebA-like attribute sampling.

Independent attributes use per-gender Bernoulli rates roughly following the
CelebA marginals. Hair colour and hair texture are categorical (at most one of
each), Bald excludes every hair colour and texture, and facial hair is only
drawn for male vectors. No_Beard is derived.
"""

from typing import Optional

import numpy as np

from t2f.captions import AttributeVector

MALE_RATE = 0.42

#                          (female, male)
INDEPENDENT_RATES: dict[str, tuple[float, float]] = {
    "Arched_Eyebrows": (0.38, 0.08),
    "Attractive": (0.68, 0.28),
    "Bags_Under_Eyes": (0.12, 0.34),
    "Bangs": (0.19, 0.10),
    "Big_Lips": (0.28, 0.18),
    "Big_Nose": (0.10, 0.45),
    "Blurry": (0.05, 0.05),
    "Bushy_Eyebrows": (0.08, 0.28),
    "Chubby": (0.02, 0.13),
    "Double_Chin": (0.02, 0.10),
    "Eyeglasses": (0.03, 0.12),
    "Heavy_Makeup": (0.65, 0.01),
    "High_Cheekbones": (0.55, 0.30),
    "Mouth_Slightly_Open": (0.50, 0.46),
    "Narrow_Eyes": (0.11, 0.12),
    "Oval_Face": (0.34, 0.19),
    "Pale_Skin": (0.06, 0.02),
    "Pointy_Nose": (0.36, 0.16),
    "Receding_Hairline": (0.05, 0.12),
    "Rosy_Cheeks": (0.10, 0.01),
    "Smiling": (0.53, 0.42),
    "Wearing_Earrings": (0.31, 0.04),
    "Wearing_Hat": (0.04, 0.07),
    "Wearing_Lipstick": (0.79, 0.01),
    "Wearing_Necklace": (0.19, 0.02),
    "Wearing_Necktie": (0.00, 0.17),
    "Young": (0.87, 0.64),
}

# None stands for "no category"
HAIR_COLOR_RATES: dict[bool, dict[Optional[str], float]] = {
    False: {"Black_Hair": 0.22, "Blond_Hair": 0.25, "Brown_Hair": 0.24, "Gray_Hair": 0.02, None: 0.27},
    True: {"Bald": 0.05, "Black_Hair": 0.26, "Blond_Hair": 0.03, "Brown_Hair": 0.17, "Gray_Hair": 0.07,
           None: 0.42},
}
HAIR_TEXTURE_RATES: dict[bool, dict[Optional[str], float]] = {
    False: {"Straight_Hair": 0.20, "Wavy_Hair": 0.45, None: 0.35},
    True: {"Straight_Hair": 0.22, "Wavy_Hair": 0.14, None: 0.64},
}
FACIAL_HAIR_RATES: dict[str, float] = {
    "5_o_Clock_Shadow": 0.26,
    "Goatee": 0.15,
    "Mustache": 0.10,
    "Sideburns": 0.14,
}
BEARDS = ("5_o_Clock_Shadow", "Goatee", "Mustache")


def _categorical(rng: np.random.Generator, table: dict) -> Optional[str]:
    keys = list(table)
    return keys[rng.choice(len(keys), p=np.array(list(table.values())))]


def sample_attributes(rng: np.random.Generator) -> AttributeVector:
    male = bool(rng.random() < MALE_RATE)
    flags: dict[str, bool] = {"Male": male}
    for name, (female_rate, male_rate) in INDEPENDENT_RATES.items():
        flags[name] = bool(rng.random() < (male_rate if male else female_rate))

    color = _categorical(rng, HAIR_COLOR_RATES[male])
    texture = _categorical(rng, HAIR_TEXTURE_RATES[male])
    if color is not None:
        flags[color] = True
    if color == "Bald":
        flags["Bangs"] = False
    elif texture is not None:
        flags[texture] = True

    if male:
        for name, rate in FACIAL_HAIR_RATES.items():
            flags[name] = bool(rng.random() < rate)
    flags["No_Beard"] = not any(flags.get(name, False) for name in BEARDS)
    return AttributeVector.from_mapping(flags)
