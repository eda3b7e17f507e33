"""Clause-level SQL normalization for exact-set-match comparison.

A SELECT statement is tokenized and decomposed into normalized clause sets:
identifiers lowercased, table aliases resolved to base names, literals
replaced by the ``__value__`` placeholder, AND-joined predicates treated as
multisets, and equality predicates made operand-order insensitive. Parsing the
canonical re-rendering of a ClauseSet yields an equal ClauseSet.

Supported surface: a single SELECT with joins, WHERE/GROUP BY/HAVING/ORDER
BY/LIMIT, at most one top-level set operation, and subqueries inside
predicates. Derived tables (subqueries in FROM) and CTEs are rejected.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .errors import ClauseParseError

VALUE_TOKEN = "__value__"

_TOKEN_RE = re.compile(
    r"""
    '(?:[^']|'')*'                    # string literal
  | \d+\.\d+ | \.\d+ | \d+            # number literal
  | "[^"]*" | `[^`]*` | \[[^\]]*\]    # quoted identifier
  | [A-Za-z_][A-Za-z_0-9]*            # word
  | <> | != | <= | >= | \|\|          # multi-char operators
  | [(),.;*=<>+\-/%]
    """,
    re.VERBOSE,
)

_JOIN_QUALIFIERS = {"inner", "left", "right", "full", "outer", "cross", "natural"}
_CLAUSE_STARTERS = {"select", "from", "where", "group", "having", "order", "limit"}
_SET_OPS = {"union", "intersect", "except"}


def tokenize(sql: str) -> List[str]:
    """Lowercased, literal-folded token stream."""
    tokens: List[str] = []
    pos = 0
    sql = sql.strip().rstrip(";").strip()
    while pos < len(sql):
        if sql[pos].isspace():
            pos += 1
            continue
        match = _TOKEN_RE.match(sql, pos)
        if not match:
            raise ClauseParseError(f"cannot tokenize at: {sql[pos:pos+20]!r}")
        token = match.group(0)
        pos = match.end()
        if token.startswith("'") or re.fullmatch(r"\d+\.\d+|\.\d+|\d+", token):
            tokens.append(VALUE_TOKEN)
        elif token[0] in "\"`[":
            tokens.append(token[1:-1].lower())
        else:
            tokens.append(token.lower())
    # Fold qualified references a . b into one token.
    folded: List[str] = []
    i = 0
    while i < len(tokens):
        if (
            i + 2 < len(tokens)
            and tokens[i + 1] == "."
            and re.fullmatch(r"[a-z_][a-z_0-9]*", tokens[i] or "")
        ):
            folded.append(f"{tokens[i]}.{tokens[i + 2]}")
            i += 3
        else:
            folded.append(tokens[i])
            i += 1
    return folded


@dataclass(frozen=True)
class ClauseSet:
    select_distinct: bool = False
    select_items: Tuple[Tuple[str, ...], ...] = ()
    from_tables: Tuple[str, ...] = ()
    join_conditions: Tuple[Tuple[str, ...], ...] = ()
    where_predicates: Tuple[Tuple[str, ...], ...] = ()
    group_by: Tuple[Tuple[str, ...], ...] = ()
    having: Tuple[Tuple[str, ...], ...] = ()
    order_by: Tuple[Tuple[str, ...], ...] = ()
    limit: bool = False
    set_op: Optional[Tuple[str, "ClauseSet"]] = None

    def canonical(self) -> str:
        """Deterministic SQL-shaped rendering that re-parses to an equal set."""
        parts = ["SELECT"]
        if self.select_distinct:
            parts.append("DISTINCT")
        parts.append(", ".join(" ".join(item) for item in self.select_items) or "*")
        if self.from_tables:
            parts.append("FROM")
            if self.join_conditions:
                parts.append(" JOIN ".join(self.from_tables))
                parts.append("ON " + " AND ".join(" ".join(c) for c in self.join_conditions))
            else:
                parts.append(", ".join(self.from_tables))
        if self.where_predicates:
            parts.append("WHERE " + " AND ".join(" ".join(p) for p in self.where_predicates))
        if self.group_by:
            parts.append("GROUP BY " + ", ".join(" ".join(g) for g in self.group_by))
        if self.having:
            parts.append("HAVING " + " AND ".join(" ".join(h) for h in self.having))
        if self.order_by:
            parts.append("ORDER BY " + ", ".join(" ".join(o) for o in self.order_by))
        if self.limit:
            parts.append(f"LIMIT {VALUE_TOKEN}")
        text = " ".join(parts)
        if self.set_op:
            op, right = self.set_op
            text += f" {op.upper()} {right.canonical()}"
        return text


def _split_depth0(tokens: List[str], separators: set) -> List[List[str]]:
    groups: List[List[str]] = [[]]
    depth = 0
    for token in tokens:
        if token == "(":
            depth += 1
        elif token == ")":
            depth -= 1
        if depth == 0 and token in separators:
            groups.append([])
        else:
            groups[-1].append(token)
    return [g for g in groups if g]


def _find_depth0(tokens: List[str], word: str, start: int = 0) -> int:
    depth = 0
    for i in range(start, len(tokens)):
        if tokens[i] == "(":
            depth += 1
        elif tokens[i] == ")":
            depth -= 1
        elif depth == 0 and tokens[i] == word:
            return i
    return -1


def _resolve_subqueries(tokens: List[str]) -> List[str]:
    """Replace ( SELECT ... ) groups with one canonicalized token."""
    output: List[str] = []
    i = 0
    while i < len(tokens):
        if tokens[i] == "(" and i + 1 < len(tokens) and tokens[i + 1] == "select":
            depth = 0
            j = i
            while j < len(tokens):
                if tokens[j] == "(":
                    depth += 1
                elif tokens[j] == ")":
                    depth -= 1
                    if depth == 0:
                        break
                j += 1
            if j >= len(tokens):
                raise ClauseParseError("unbalanced parentheses around subquery")
            inner = _parse_tokens(tokens[i + 1 : j])
            output.append("(" + inner.canonical() + ")")
            i = j + 1
        else:
            output.append(tokens[i])
            i += 1
    return output


def _apply_aliases(
    tokens: List[str], aliases: Dict[str, str], single_table: Optional[str] = None
) -> List[str]:
    # With a single FROM table, qualified and bare references are equivalent;
    # strip the qualifier so both spellings normalize identically.
    resolved = []
    for token in tokens:
        if "." in token and not token.startswith("("):
            qualifier, _, column = token.partition(".")
            base = aliases.get(qualifier, qualifier)
            token = column if base == single_table else f"{base}.{column}"
        resolved.append(token)
    return resolved


def _normalize_predicate(tokens: List[str]) -> Tuple[str, ...]:
    # Order-insensitive operands for plain equality predicates.
    if tokens.count("=") == 1 and all(t not in ("<", ">", "<=", ">=", "<>", "!=") for t in tokens):
        position = tokens.index("=")
        left, right = tokens[:position], tokens[position + 1 :]
        if left and right:
            sides = sorted([" ".join(left), " ".join(right)])
            return tuple((sides[0] + " = " + sides[1]).split(" "))
    return tuple(tokens)


def _parse_from(tokens: List[str]) -> Tuple[List[str], List[Tuple[str, ...]], Dict[str, str]]:
    tables: List[str] = []
    conditions: List[Tuple[str, ...]] = []
    aliases: Dict[str, str] = {}
    raw_conditions: List[List[str]] = []
    i = 0
    while i < len(tokens):
        token = tokens[i]
        if token in _JOIN_QUALIFIERS or token == "join" or token == ",":
            i += 1
            continue
        if token.startswith("("):
            raise ClauseParseError("unsupported construct: derived table in FROM")
        if not re.fullmatch(r"[a-z_][a-z_0-9]*", token):
            raise ClauseParseError(f"unsupported FROM token: {token!r}")
        table = token
        tables.append(table)
        aliases[table] = table
        i += 1
        if i < len(tokens) and tokens[i] == "as":
            i += 1
        if (
            i < len(tokens)
            and re.fullmatch(r"[a-z_][a-z_0-9]*", tokens[i] or "")
            and tokens[i] not in ("join", "on", "as", ",")
            and tokens[i] not in _JOIN_QUALIFIERS
        ):
            aliases[tokens[i]] = table
            i += 1
        if i < len(tokens) and tokens[i] == "on":
            i += 1
            condition_tokens: List[str] = []
            depth = 0
            while i < len(tokens):
                if tokens[i] == "(":
                    depth += 1
                elif tokens[i] == ")":
                    depth -= 1
                if depth == 0 and (tokens[i] == "join" or tokens[i] in _JOIN_QUALIFIERS or tokens[i] == ","):
                    break
                condition_tokens.append(tokens[i])
                i += 1
            raw_conditions.extend(
                _split_depth0(condition_tokens, {"and"})
            )
    single = tables[0] if len(set(tables)) == 1 else None
    for condition in raw_conditions:
        conditions.append(_normalize_predicate(_apply_aliases(condition, aliases, single)))
    return tables, list(conditions), aliases


def _parse_tokens(tokens: List[str]) -> ClauseSet:
    if not tokens:
        raise ClauseParseError("empty statement")
    if tokens[0] == "with":
        raise ClauseParseError("unsupported construct: WITH (common table expression)")
    if tokens[0] != "select":
        raise ClauseParseError(f"expected SELECT, got {tokens[0]!r}")

    # One level of set operation: split on the first depth-0 set operator.
    found = [
        (position, op)
        for op in sorted(_SET_OPS)
        if (position := _find_depth0(tokens, op, start=1)) != -1
    ]
    if found:
        position, op = min(found)
        right_tokens = tokens[position + 1 :]
        if right_tokens and right_tokens[0] == "all":
            op = op + " all"
            right_tokens = right_tokens[1:]
        left = _parse_tokens(tokens[:position])
        right = _parse_tokens(right_tokens)
        return ClauseSet(**{**left.__dict__, "set_op": (op, right)})

    tokens = _resolve_subqueries(tokens)

    # Locate depth-0 clause boundaries.
    boundaries: List[Tuple[str, int]] = []
    depth = 0
    i = 0
    while i < len(tokens):
        token = tokens[i]
        if token == "(":
            depth += 1
        elif token == ")":
            depth -= 1
        elif depth == 0 and token in _CLAUSE_STARTERS:
            if token in ("group", "order"):
                if i + 1 < len(tokens) and tokens[i + 1] == "by":
                    boundaries.append((token + " by", i))
                    i += 2
                    continue
            else:
                boundaries.append((token, i))
        i += 1
    names = [name for name, _ in boundaries]
    if names.count("select") != 1:
        raise ClauseParseError("expected exactly one SELECT clause")

    sections: Dict[str, List[str]] = {}
    for index, (name, position) in enumerate(boundaries):
        skip = 2 if name in ("group by", "order by") else 1
        end = boundaries[index + 1][1] if index + 1 < len(boundaries) else len(tokens)
        if name in sections:
            raise ClauseParseError(f"duplicate clause: {name.upper()}")
        sections[name] = tokens[position + skip : end]

    from_tables: List[str] = []
    join_conditions: List[Tuple[str, ...]] = []
    aliases: Dict[str, str] = {}
    if "from" in sections:
        from_tables, join_conditions, aliases = _parse_from(sections["from"])
    single_table = from_tables[0] if len(set(from_tables)) == 1 else None

    select_tokens = _apply_aliases(sections.get("select", []), aliases, single_table)
    select_distinct = bool(select_tokens) and select_tokens[0] == "distinct"
    if select_distinct:
        select_tokens = select_tokens[1:]
    select_items = []
    for item in _split_depth0(select_tokens, {","}):
        if len(item) >= 2 and item[-2] == "as":
            item = item[:-2]
        select_items.append(tuple(item))

    def predicates(name: str) -> List[Tuple[str, ...]]:
        if name not in sections:
            return []
        clause_tokens = _apply_aliases(sections[name], aliases, single_table)
        return [_normalize_predicate(p) for p in _split_depth0(clause_tokens, {"and"})]

    group_items = [
        tuple(g)
        for g in _split_depth0(
            _apply_aliases(sections.get("group by", []), aliases, single_table), {","}
        )
    ]
    order_items = []
    for item in _split_depth0(
        _apply_aliases(sections.get("order by", []), aliases, single_table), {","}
    ):
        if item and item[-1] == "asc":
            item = item[:-1]
        order_items.append(tuple(item))

    return ClauseSet(
        select_distinct=select_distinct,
        select_items=tuple(sorted(select_items)),
        from_tables=tuple(sorted(from_tables)),
        join_conditions=tuple(sorted(join_conditions)),
        where_predicates=tuple(sorted(predicates("where"))),
        group_by=tuple(sorted(group_items)),
        having=tuple(sorted(predicates("having"))),
        order_by=tuple(order_items),
        limit="limit" in sections,
    )


def parse_clauses(sql: str) -> ClauseSet:
    """Decompose one SELECT statement into its normalized clause sets."""
    return _parse_tokens(tokenize(sql))


def has_top_level_order_by(sql: str) -> bool:
    """Whether the statement orders its result (depth-0 ORDER BY)."""
    try:
        tokens = tokenize(sql)
    except ClauseParseError:
        return False
    position = _find_depth0(tokens, "order")
    return position != -1 and position + 1 < len(tokens) and tokens[position + 1] == "by"
