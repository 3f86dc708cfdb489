"""
Attack cost tables and parameter advice
=======================================
"""

from prcbreak.complexity import advise_parameters, emit_table
from prcbreak.prc_io import table_csv

print(table_csv(emit_table("llm")))
print(table_csv(emit_table("gim")))

adv = advise_parameters("llm", 128)
for row in adv.per_t:
    if row["t"] in (9, 11, 13, 15):
        print(row["t"], row["partial_suggestion"], row["suggestion"])
