//! Fixed vocabulary for the stub generator. Order is part of the stub's
//! output contract; do not reorder.

pub(crate) const WORDS: [&str; 256] = [
    "able",
    "about",
    "above",
    "accept",
    "across",
    "act",
    "add",
    "after",
    "again",
    "against",
    "age",
    "agree",
    "air",
    "all",
    "allow",
    "almost",
    "alone",
    "along",
    "already",
    "also",
    "always",
    "amount",
    "animal",
    "answer",
    "any",
    "appear",
    "apple",
    "area",
    "arm",
    "around",
    "arrive",
    "art",
    "ask",
    "away",
    "baby",
    "back",
    "bad",
    "bag",
    "ball",
    "bank",
    "base",
    "bath",
    "bear",
    "beautiful",
    "bed",
    "before",
    "begin",
    "behind",
    "bell",
    "best",
    "better",
    "big",
    "bird",
    "black",
    "blue",
    "boat",
    "body",
    "book",
    "both",
    "bottom",
    "box",
    "boy",
    "bread",
    "break",
    "bright",
    "bring",
    "brother",
    "brown",
    "build",
    "burn",
    "busy",
    "buy",
    "call",
    "calm",
    "camp",
    "can",
    "capital",
    "car",
    "card",
    "care",
    "carry",
    "case",
    "cat",
    "catch",
    "cause",
    "center",
    "chair",
    "change",
    "cheap",
    "check",
    "child",
    "city",
    "class",
    "clean",
    "clear",
    "close",
    "cloud",
    "coast",
    "cold",
    "color",
    "come",
    "common",
    "cook",
    "cool",
    "corner",
    "cost",
    "count",
    "country",
    "course",
    "cover",
    "cross",
    "crowd",
    "cup",
    "cut",
    "dance",
    "dark",
    "day",
    "dead",
    "deal",
    "dear",
    "deep",
    "desk",
    "dinner",
    "direct",
    "doctor",
    "dog",
    "door",
    "down",
    "draw",
    "dream",
    "dress",
    "drink",
    "drive",
    "dry",
    "early",
    "earth",
    "east",
    "easy",
    "eat",
    "edge",
    "egg",
    "end",
    "enough",
    "enter",
    "even",
    "evening",
    "event",
    "every",
    "example",
    "eye",
    "face",
    "fact",
    "fair",
    "fall",
    "family",
    "far",
    "farm",
    "fast",
    "father",
    "field",
    "find",
    "fine",
    "fire",
    "first",
    "fish",
    "fit",
    "floor",
    "flower",
    "fly",
    "follow",
    "food",
    "foot",
    "forest",
    "free",
    "fresh",
    "friend",
    "front",
    "fruit",
    "full",
    "game",
    "garden",
    "gate",
    "give",
    "glass",
    "gold",
    "good",
    "green",
    "ground",
    "group",
    "grow",
    "guest",
    "hair",
    "half",
    "hall",
    "hand",
    "happy",
    "hard",
    "hat",
    "head",
    "hear",
    "heart",
    "heat",
    "help",
    "high",
    "hill",
    "history",
    "hold",
    "home",
    "hope",
    "horse",
    "hot",
    "hotel",
    "hour",
    "house",
    "idea",
    "inside",
    "island",
    "join",
    "just",
    "keep",
    "key",
    "kind",
    "king",
    "kitchen",
    "know",
    "lake",
    "land",
    "large",
    "last",
    "late",
    "laugh",
    "lead",
    "learn",
    "leave",
    "left",
    "letter",
    "light",
    "line",
    "list",
    "little",
    "live",
    "long",
    "look",
    "love",
    "low",
    "lunch",
    "machine",
    "main",
    "make",
    "map",
    "market",
    "meet",
    "middle",
    "milk",
    "mind",
    "minute",
];
