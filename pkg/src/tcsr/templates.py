"""Prompt template registry with few-shot demonstration blocks.

Four templates drive every LLM call: keyword extraction (4-shot), fuzzy
detection of storage values (9-shot), SQL generation (4-shot), and SQL
revision (0-shot). Demonstrations are fixed text stored with the template so
rendering is pure. Downstream parsers rely on the answer formats the
demonstrations exhibit:

- extraction answers are lines ``keyword | kind | table | col1, col2``
  with kind one of ``data_content`` / ``schema``;
- fuzzy detection answers are a JSON list of strings;
- generation/revision answers are a single SQLite statement.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Dict, Mapping, Tuple

from .errors import TemplateError, UnboundSlotError


class TemplateId(str, enum.Enum):
    KeywordExtraction = "keyword_extraction"
    FuzzyDetection = "fuzzy_detection"
    SqlGeneration = "sql_generation"
    SqlRevision = "sql_revision"


@dataclass(frozen=True)
class Template:
    template_id: TemplateId
    slots: Tuple[str, ...]
    text: str


_EXTRACTION_DEMOS = """\
### Sqlite SQL tables, with their table names, column names and data value examples:
# Table: employees
# Columns: name, department, salary
### Question:
Which employees work in the sales department?
### Answer:
sales department | data_content | employees | department

### Sqlite SQL tables, with their table names, column names and data value examples:
# Table: concert
# Columns: concert_name, year, stadium_id
### Question:
How many concerts were held in the summer of 2019?
### Answer:
the summer of 2019 | data_content | concert | year

### Sqlite SQL tables, with their table names, column names and data value examples:
# Table: products
# Columns: product_name, price, category
### Question:
What is the price of the product named thinkpad laptop?
### Answer:
thinkpad laptop | data_content | products | product_name
price | schema | products | price

### Sqlite SQL tables, with their table names, column names and data value examples:
# Table: customers
# Columns: customer_name, signup_date, city
### Question:
List all customers ordered by signup date.
### Answer:
signup date | schema | customers | signup_date"""

_KEYWORD_EXTRACTION = """\
### First, find schema keywords and data content keywords in the given question. Then, for each keyword, try to identify the possible corresponding tables and columns using the value examples provided.
### Answer with one line per keyword in the exact format: keyword | kind | table | column1, column2
### kind is either data_content or schema.

==========
{demos}
==========

### Sqlite SQL tables, with their table names, column names and data value examples:
{desc_str}
### Foreign keys of SQLite tables, used for table joins:
{fk_str}
### Question:
{query}
### Answer:
""".replace("{demos}", _EXTRACTION_DEMOS)

_FUZZY_DEMOS = """\
# data content keyword: the sales department.
# data samples for column department: ['Sales', 'Engineering', 'HR']
# possible storage values: ["Sales", "sales", "Sales Department"]

# data content keyword: the United States.
# data samples for column country: ['USA', 'France', 'Japan']
# possible storage values: ["USA", "US", "United States", "United States of America"]

# data content keyword: the summer of 2019.
# data samples for column year: ['2018', '2019', '2020']
# possible storage values: ["2019"]

# data content keyword: female.
# data samples for column gender: ['F', 'M']
# possible storage values: ["F", "Female", "female"]

# data content keyword: new york city.
# data samples for column city: ['New York', 'Boston', 'Chicago']
# possible storage values: ["New York", "NYC", "New York City"]

# data content keyword: heavy rain.
# data samples for column weather: ['rain', 'sunny', 'cloudy']
# possible storage values: ["rain", "heavy rain", "rainy"]

# data content keyword: professor.
# data samples for column rank: ['Prof', 'AsstProf', 'AssocProf']
# possible storage values: ["Prof", "Professor"]

# data content keyword: german.
# data samples for column language: ['English', 'German', 'French']
# possible storage values: ["German", "Deutsch", "DE"]

# data content keyword: first class.
# data samples for column seat_class: ['1st', '2nd', 'economy']
# possible storage values: ["1st", "first", "First Class"]"""

_FUZZY_DETECTION = """\
### Based on data samples extracted from the related columns, infer the possible storage values (up to 5) of the data content keyword in the database. Please provide them in the form of a list.

{demos}

# data content keyword: {keyword}.
# data samples for column {column}: {datasamples}
# possible storage values:
""".replace("{demos}", _FUZZY_DEMOS)

_GENERATION_DEMOS = """\
### Sqlite SQL tables, with their table names, column names and data value examples:
# Table: employees
# Columns: name, department, salary
### Question:
Which employees work in the sales department?
###  Encoding knowledge for SQL generation:
# keyword 'sales department' is stored as 'Sales' in employees.department
### SQL:
SELECT name FROM employees WHERE department = 'Sales'

### Sqlite SQL tables, with their table names, column names and data value examples:
# Table: singer
# Columns: singer_name, country, age
### Question:
How many singers are from the United States?
###  Encoding knowledge for SQL generation:
# keyword 'the United States' is stored as 'USA' in singer.country
### SQL:
SELECT count(*) FROM singer WHERE country = 'USA'

### Sqlite SQL tables, with their table names, column names and data value examples:
# Table: products
# Columns: product_name, price, category
### Question:
What is the price of the product named thinkpad laptop?
###  Encoding knowledge for SQL generation:
none
### SQL:
SELECT price FROM products WHERE product_name = 'thinkpad laptop'

### Sqlite SQL tables, with their table names, column names and data value examples:
# Table: customers
# Columns: customer_name, signup_date, city
### Question:
List all customers ordered by signup date.
###  Encoding knowledge for SQL generation:
none
### SQL:
SELECT customer_name FROM customers ORDER BY signup_date"""

_SQL_GENERATION = """\
### Refer to the provided table and encoding knowledge, follow the requirements, and use valid SQLite to answer the question.

### Requirements:
# In `SELECT <column>`, just select needed columns in the Question without any unnecessary column or value
# If the same column name appears in multiple tables, specify the table to which it belongs to avoid ambiguity.

==========
{demos}
==========

### Sqlite SQL tables, with their table names, column names and data value examples:
{desc_str}
### Foreign keys of SQLite tables, used for table joins:
{fk_str}
### Question:
{query}
###  Encoding knowledge for SQL generation:
{related_prompt}
### SQL:
SELECT \
""".replace("{demos}", _GENERATION_DEMOS)

_SQL_REVISION = """\
### When executing SQL below, some errors occurred, please fix up SQL based on query and database info.
### Solve the task step by step if you need to. Using SQL format in the code block, and indicate script type in the code block.
### When you find an answer, verify the answer carefully.

### Notes & Examples:
# In `SELECT <column>`, just select needed columns in the Question without any unnecessary column or value
# Don't use `IN`, `OR`, `LEFT JOIN` as it might cause extra results, use `JOIN`, `INTERSECT`, `EXCEPT` instead
# Use `DISTINCT`, `DESC`, or `LIMIT` when necessary
# In `FROM <table>` or `JOIN <table>`, do not include unnecessary table
# In `JOIN <table>`, make sure the Foreign keys used in the SQL is correct

### Question:
{query}
### Encoding knowledge for SQL generation:
{related_prompt}
### Sqlite SQL tables, with their table names, column names and data value examples:
{desc_str}
### Foreign keys of SQLite tables, used for table joins:
{fk_str}
### Old SQL:
{old_sql}
### SQLite error:
{sqlite_error}
### Exception class:
{exception_class}

### Now please fixup old SQL and generate new SQL only and with no explanation.
### correct SQL:
"""

_REGISTRY: Dict[TemplateId, Template] = {
    TemplateId.KeywordExtraction: Template(
        TemplateId.KeywordExtraction, ("desc_str", "fk_str", "query"), _KEYWORD_EXTRACTION
    ),
    TemplateId.FuzzyDetection: Template(
        TemplateId.FuzzyDetection, ("keyword", "column", "datasamples"), _FUZZY_DETECTION
    ),
    TemplateId.SqlGeneration: Template(
        TemplateId.SqlGeneration,
        ("desc_str", "fk_str", "query", "related_prompt"),
        _SQL_GENERATION,
    ),
    TemplateId.SqlRevision: Template(
        TemplateId.SqlRevision,
        ("query", "related_prompt", "desc_str", "fk_str", "old_sql", "sqlite_error", "exception_class"),
        _SQL_REVISION,
    ),
}


def get_template(template_id: TemplateId) -> Template:
    try:
        return _REGISTRY[TemplateId(template_id)]
    except (KeyError, ValueError):
        raise TemplateError(f"unknown template: {template_id}")


def render_template(template_id: TemplateId, bindings: Mapping[str, str]) -> str:
    """Substitute every ``{slot}`` in the template; bindings must be exact."""
    template = get_template(template_id)
    extra = set(bindings) - set(template.slots)
    if extra:
        raise TemplateError(f"unexpected bindings: {sorted(extra)}")
    text = template.text
    for slot in template.slots:
        if slot not in bindings:
            raise UnboundSlotError(slot)
        text = text.replace("{" + slot + "}", str(bindings[slot]))
    return text
