"""Table-content-aware text-to-SQL with self-retrieval.

The pipeline extracts data-content keywords from a question, fuzz-probes the
target SQLite database with mutated seed queries to discover exact stored
values, aligns keywords against an encoding-knowledge table by embedding
similarity, and then runs a generation-execution-revision loop until the SQL
executes with a non-empty result.
"""

__version__ = "0.1.0"
