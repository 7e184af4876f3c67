"""Corpus ingestion: episodes from raw lines, plus the binary encoding mode.

An episode is one line of text with all whitespace removed; the positions
where whitespace runs were removed are kept as ground-truth word boundaries
for split diagnostics.  In binary mode the per-episode unit is instead a
single whitespace-delimited token re-encoded as 8-bit character codes.
"""

from dataclasses import dataclass, field


class CorpusError(Exception):
    pass


class CodebookOverflowError(CorpusError):
    """More than 256 distinct characters fed to a binary codebook."""


@dataclass
class Episode:
    raw_line: str
    stripped: str
    boundaries: frozenset  # indices k: word boundary between stripped[k-1] and stripped[k]
    primitive_ids: list


class CorpusHandle:
    """Random access over the non-blank lines of a text file."""

    def __init__(self, lines, path=None):
        if not lines:
            raise CorpusError(f"no non-blank lines in corpus {path!r}")
        self.lines = lines
        self.path = path

    def __len__(self):
        return len(self.lines)

    def sample(self, rng):
        """A uniformly random line."""
        return self.lines[rng.randrange(len(self.lines))]


def load_corpus(path):
    """Read a UTF-8 text file, one candidate episode per line; blanks skipped."""
    with open(path, encoding="utf-8") as f:
        lines = [line.rstrip("\n") for line in f]
    return CorpusHandle([ln for ln in lines if ln.strip()], path=str(path))


def strip_line(line):
    """Remove all whitespace; return (stripped, boundary indices).

    A run of whitespace yields a single boundary at the index of the next
    kept character.  Boundaries at the very start or end of the stripped
    text are not boundaries and are dropped.
    """
    chars = []
    boundaries = set()
    pending = False
    for ch in line:
        if ch.isspace():
            pending = True
        else:
            if pending and chars:
                boundaries.add(len(chars))
            pending = False
            chars.append(ch)
    return "".join(chars), frozenset(boundaries)


def make_episode(line, network):
    """Build an episode from a raw line, allocating unseen primitives.

    Mutates the network on first sight of a character (and creates the
    clones in all existing higher layers), so this must run on the training
    thread.
    """
    stripped, boundaries = strip_line(line)
    if not stripped:
        raise CorpusError("blank line cannot form an episode")
    primitive_ids = [network.primitive_for(ch) for ch in stripped]
    return Episode(line, stripped, boundaries, primitive_ids)


@dataclass
class BinaryCodebook:
    """First-seen-order assignment of 8-bit codes to characters."""

    char_to_code: dict = field(default_factory=dict)
    next_counter: int = 0

    def code_for(self, ch):
        code = self.char_to_code.get(ch)
        if code is None:
            if self.next_counter >= 256:
                raise CodebookOverflowError("binary codebook exhausted (256 codes)")
            code = format(self.next_counter, "08b")
            self.char_to_code[ch] = code
            self.next_counter += 1
        return code

    def to_state(self):
        return {"chars": list(self.char_to_code.items()), "next_counter": self.next_counter}

    @classmethod
    def from_state(cls, state):
        return cls(dict(state["chars"]), state["next_counter"])


def encode_binary(token, codebook):
    """Concatenated 8-bit codes for each character of the token."""
    if not token or token.isspace():
        raise CorpusError("cannot binary-encode a blank token")
    return "".join(codebook.code_for(ch) for ch in token)


def decode_binary(bits, codebook):
    """Inverse of encode_binary for codes already in the codebook."""
    if len(bits) % 8 != 0:
        raise CorpusError("bit string length not a multiple of 8")
    rev = {code: ch for ch, code in codebook.char_to_code.items()}
    out = []
    for i in range(0, len(bits), 8):
        code = bits[i:i + 8]
        if code not in rev:
            raise CorpusError(f"unknown code {code!r}")
        out.append(rev[code])
    return "".join(out)


def make_binary_episode(line, codebook, network, rng):
    """Binary-mode episode: one random token of the line, as a bit string.

    Character boundaries (every 8 bits) are recorded as the ground truth for
    split diagnostics.
    """
    tokens = line.split()
    if not tokens:
        raise CorpusError("blank line cannot form an episode")
    token = tokens[rng.randrange(len(tokens))]
    bits = encode_binary(token, codebook)
    boundaries = frozenset(range(8, len(bits), 8))
    primitive_ids = [network.primitive_for(ch) for ch in bits]
    return Episode(token, bits, boundaries, primitive_ids)
