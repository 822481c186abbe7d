"""
Bi-directional parse tree.

Layers: root -> length N -> direction (forward, reverse) -> M token
levels -> template group. The forward branch is keyed on the first M
tokens, the reverse branch on the first M tokens of the reversed
sequence, so a variable at either end of a message still leaves one
branch intact.

Wildcard precedence is strict: once a node has a "<*>" child, descent
always takes it and the exact-token siblings become obsolete. Obsolete
nodes stay in memory; the templates beneath them are moved under the
wildcard so every live template remains reachable along its own tokens.
"""

import logging
from enum import Enum
from typing import Iterator, Optional, Sequence

from logmend.model import WILDCARD, ConsistencyError, Template, TokenSeq, render

logger = logging.getLogger(__name__)


class Direction(str, Enum):
    FORWARD = "forward"
    REVERSE = "reverse"


def branch_depth(n: int) -> int:
    """Token levels per branch for a length-n message: (n+1)/2 if n is odd, n/2+1 if even."""
    if n < 1:
        raise ValueError(f"Token length must be >= 1, got {n}")
    if n % 2:
        return (n + 1) // 2
    return n // 2 + 1


def _texts(tokens) -> list:
    if isinstance(tokens, TokenSeq):
        return list(tokens.tokens)
    if isinstance(tokens, Template):
        return list(tokens.texts)
    return [getattr(t, 'text', t) for t in tokens]


def branch_path(tokens, direction: Direction, depth: int) -> list:
    texts = _texts(tokens)
    if direction is Direction.REVERSE:
        texts = texts[::-1]
    return texts[:depth]


class TemplateGroup:
    """Leaf of a branch: templates keyed by id, in attachment order."""

    __slots__ = ('templates',)

    def __init__(self):
        self.templates = {}

    def __len__(self) -> int:
        return len(self.templates)

    def __iter__(self) -> Iterator[Template]:
        return iter(list(self.templates.values()))

    def __contains__(self, template_id: int) -> bool:
        return template_id in self.templates

    def add(self, template: Template) -> None:
        self.templates[template.id] = template

    def discard(self, template_id: int) -> None:
        self.templates.pop(template_id, None)


class Node:
    __slots__ = ('token', 'children', 'obsolete', 'group')

    def __init__(self, token: Optional[str] = None):
        self.token = token
        self.children = {}
        self.obsolete = False
        self.group = None

    @property
    def wildcard_child(self) -> Optional['Node']:
        return self.children.get(WILDCARD)

    def leaves(self) -> Iterator['Node']:
        if self.group is not None:
            yield self
        for child in self.children.values():
            yield from child.leaves()


class LengthNode:
    """Second layer: one per token length, holding both direction branches."""

    __slots__ = ('length', 'depth', 'branches')

    def __init__(self, length: int):
        self.length = length
        self.depth = branch_depth(length)
        self.branches = {d: Node(d.value) for d in Direction}


class ParseTree:
    def __init__(self):
        self.length_index = {}
        self._templates = {}

    def __contains__(self, template_id: int) -> bool:
        return template_id in self._templates

    @property
    def length_node_count(self) -> int:
        return len(self.length_index)

    # ------------------------------------------------------------------
    # Traversal
    # ------------------------------------------------------------------

    def _step(self, node: Node, token: str) -> Node:
        """Walk (and build) one level the way descent will later walk it."""
        wildcard = node.wildcard_child
        if wildcard is not None:
            return wildcard
        if token == WILDCARD:
            return self._add_wildcard(node)
        child = node.children.get(token)
        if child is None:
            child = Node(token)
            node.children[token] = child
        return child

    def _add_wildcard(self, node: Node) -> Node:
        wildcard = Node(WILDCARD)
        displaced = []
        for child in node.children.values():
            child.obsolete = True
            for leaf in child.leaves():
                displaced.extend(leaf.group)
                leaf.group = TemplateGroup()
        node.children[WILDCARD] = wildcard
        if displaced:
            logger.debug(
                f"Wildcard under '{node.token}' obsoleted {len(node.children) - 1} branch(es), "
                f"re-attaching {len(displaced)} template(s)"
            )
        for template in displaced:
            self._reattach(template)
        return wildcard

    def _reattach(self, template: Template) -> None:
        for direction in Direction:
            if self._find_group(direction, template) is None:
                self._attach(direction, template)

    def _attach(self, direction: Direction, template: Template) -> TemplateGroup:
        length_node = self.length_index.get(template.length)
        if length_node is None:
            length_node = LengthNode(template.length)
            self.length_index[template.length] = length_node
        node = length_node.branches[direction]
        for token in branch_path(template, direction, length_node.depth):
            node = self._step(node, token)
        if node.group is None:
            node.group = TemplateGroup()
        node.group.add(template)
        return node.group

    def _walk(self, direction: Direction, tokens) -> Optional[Node]:
        texts = _texts(tokens)
        length_node = self.length_index.get(len(texts))
        if length_node is None:
            return None
        node = length_node.branches[direction]
        for token in branch_path(texts, direction, length_node.depth):
            wildcard = node.wildcard_child
            if wildcard is not None:
                node = wildcard
                continue
            child = node.children.get(token)
            if child is None or child.obsolete:
                return None
            node = child
        return node

    def _find_group(self, direction: Direction, template: Template) -> Optional[TemplateGroup]:
        leaf = self._walk(direction, template)
        if leaf is None or leaf.group is None or template.id not in leaf.group:
            return None
        return leaf.group

    # ------------------------------------------------------------------
    # Public operations
    # ------------------------------------------------------------------

    def insert(self, template: Template) -> None:
        """Build both branches for a template; re-inserting a known template is a no-op."""
        if template.id in self._templates:
            return
        self._templates[template.id] = template
        for direction in Direction:
            self._attach(direction, template)
        logger.debug(f"Inserted template {template.id} into tree: {template.text}")

    def descend(self, direction: Direction, tokens) -> Optional[TemplateGroup]:
        leaf = self._walk(Direction(direction), tokens)
        if leaf is None:
            return None
        return leaf.group

    def apply_update(self, template_id: int, old_tokens: Sequence, new_tokens: Sequence) -> None:
        """
        Move a template whose tokens changed from old_tokens to new_tokens.

        Where a changed position lies inside a branch, the template is
        detached from its old leaf and re-inserted along the new path;
        creating the wildcard there obsoletes the exact-token sibling.
        """
        template = self._templates.get(template_id)
        if template is None:
            raise ConsistencyError(f"Template {template_id} is not in the parse tree")

        old_groups = {}
        for direction in Direction:
            leaf = self._walk(direction, old_tokens)
            if leaf is None or leaf.group is None or template_id not in leaf.group:
                raise ConsistencyError(
                    f"Template {template_id} not reachable {direction.value} via '{render(old_tokens)}'"
                )
            old_groups[direction] = leaf.group

        template.replace_tokens(new_tokens)
        depth = branch_depth(template.length)

        for direction in Direction:
            if branch_path(old_tokens, direction, depth) == branch_path(new_tokens, direction, depth):
                continue
            old_groups[direction].discard(template_id)
            self._attach(direction, template)
            logger.debug(f"Rebuilt {direction.value} branch of template {template_id}")

    # ------------------------------------------------------------------
    # Inspection
    # ------------------------------------------------------------------

    def iter_leaves(self) -> Iterator[tuple]:
        """Yield (length, direction, path tokens, group) for every leaf, obsolete ones included."""
        for length in sorted(self.length_index):
            length_node = self.length_index[length]
            for direction in Direction:
                yield from self._iter_paths(length, direction, length_node.branches[direction], [])

    def _iter_paths(self, length, direction, node, path):
        if node.group is not None:
            yield (length, direction, list(path), node.group)
        for token in sorted(node.children):
            child = node.children[token]
            yield from self._iter_paths(length, direction, child, path + [token])

    def nodes(self) -> Iterator[Node]:
        for length_node in self.length_index.values():
            for branch in length_node.branches.values():
                stack = list(branch.children.values())
                while stack:
                    node = stack.pop()
                    yield node
                    stack.extend(node.children.values())

    @property
    def obsolete_count(self) -> int:
        return sum(1 for node in self.nodes() if node.obsolete)

    def render(self) -> str:
        """Deterministic indented dump, one node per line."""
        lines = ["root"]
        for length in sorted(self.length_index):
            length_node = self.length_index[length]
            lines.append(f"  length={length} (M={length_node.depth})")
            for direction in Direction:
                lines.append(f"    {direction.value}")
                self._render_node(length_node.branches[direction], 3, lines)
        return '\n'.join(lines)

    def _render_node(self, node: Node, depth: int, lines: list) -> None:
        for token in sorted(node.children):
            child = node.children[token]
            line = '  ' * depth + token
            if child.obsolete:
                line += " [obsolete]"
            if child.group is not None:
                line += f" (templates={len(child.group)})"
            lines.append(line)
            self._render_node(child, depth + 1, lines)

    def stats(self) -> dict:
        return {
            'length_nodes': self.length_node_count,
            'nodes': sum(1 for _ in self.nodes()),
            'obsolete_nodes': self.obsolete_count,
            'templates': len(self._templates),
        }
