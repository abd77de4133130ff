"""The yes/no instruction template wrapped around each (document, claim) pair."""

INSTRUCTION_TEMPLATE = """{document}.

Choose your answer: based on the paragraph above can we conclude that "{claim}"?

OPTIONS:
- Yes
- No
I think the answer is"""


def fill_instruction(document: str, claim: str) -> str:
    """Instruction-formatted input for the classification head."""
    return INSTRUCTION_TEMPLATE.format(document=document, claim=claim)
