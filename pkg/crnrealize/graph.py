from typing import Dict, Iterable, List, Optional, Sequence, Tuple

__all__ = [
    'Edge',
    'connected_components',
    'leaving_edges',
    'terminal_components',
    'strongly_connected_components',
]

Edge = Tuple[int, int]


def _adjacency(num_vertices: int, edges: Iterable[Edge]) -> List[List[int]]:
    adj: List[List[int]] = [[] for _ in range(num_vertices)]
    for src, dst in edges:
        adj[src].append(dst)
    for targets in adj:
        targets.sort()
    return adj


def _canonical(components: Iterable[Iterable[int]]) -> List[Tuple[int, ...]]:
    return sorted((tuple(sorted(comp)) for comp in components), key=lambda c: c[0])


def strongly_connected_components(
    num_vertices: int, edges: Iterable[Edge], vertices: Optional[Sequence[int]] = None
) -> List[Tuple[int, ...]]:
    """Tarjan's algorithm, single pass and non-recursive.

    Components are returned sorted internally and ordered by their
    smallest member, so the output does not depend on traversal order.

    :param num_vertices: Vertices are 0 .. num_vertices - 1
    :param edges: Directed (source, target) pairs
    :param vertices: Restrict the search roots (and output) to these vertices
    :return: The list of strongly connected components
    """
    adj = _adjacency(num_vertices, edges)
    roots = range(num_vertices) if vertices is None else sorted(vertices)

    index: Dict[int, int] = {}
    lowlink: Dict[int, int] = {}
    on_stack = [False] * num_vertices
    stack: List[int] = []
    components: List[List[int]] = []
    counter = 0

    for root in roots:
        if root in index:
            continue

        index[root] = lowlink[root] = counter
        counter += 1
        stack.append(root)
        on_stack[root] = True
        work = [(root, 0)]

        while work:
            v, pos = work[-1]
            if pos < len(adj[v]):
                work[-1] = (v, pos + 1)
                w = adj[v][pos]
                if w not in index:
                    index[w] = lowlink[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack[w] = True
                    work.append((w, 0))
                elif on_stack[w]:
                    lowlink[v] = min(lowlink[v], index[w])
                continue

            work.pop()
            if work:
                parent = work[-1][0]
                lowlink[parent] = min(lowlink[parent], lowlink[v])

            if lowlink[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(w)
                    if w == v:
                        break
                components.append(comp)

    return _canonical(components)


def connected_components(
    num_vertices: int, edges: Iterable[Edge], vertices: Optional[Sequence[int]] = None
) -> List[Tuple[int, ...]]:
    """Components of the graph with edge direction ignored

    :param num_vertices: Vertices are 0 .. num_vertices - 1
    :param edges: (source, target) pairs
    :param vertices: Only report components containing these vertices
    :return: Components ordered by smallest member
    """
    parent = list(range(num_vertices))

    def find(v: int) -> int:
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for src, dst in edges:
        a, b = find(src), find(dst)
        if a != b:
            parent[max(a, b)] = min(a, b)

    wanted = range(num_vertices) if vertices is None else vertices
    groups: Dict[int, List[int]] = {}
    for v in wanted:
        groups.setdefault(find(v), []).append(v)
    return _canonical(groups.values())


def leaving_edges(components: Sequence[Sequence[int]], edges: Iterable[Edge]) -> List[Edge]:
    """Edges whose endpoints lie in different strongly connected components

    :param components: Output of strongly_connected_components
    :param edges: The edges of the graph
    :return: Sorted list of edges leaving their component
    """
    owner = {v: num for num, comp in enumerate(components) for v in comp}
    return sorted(
        (src, dst) for src, dst in edges if owner.get(src, -1) != owner.get(dst, -2)
    )


def terminal_components(
    components: Sequence[Sequence[int]], edges: Iterable[Edge]
) -> List[Tuple[int, ...]]:
    """Strongly connected components no edge leaves (terminal strong
    linkage classes), in the order given
    """
    owner = {v: num for num, comp in enumerate(components) for v in comp}
    left = {owner[src] for src, dst in edges if owner.get(src, -1) != owner.get(dst, -2)}
    return [tuple(comp) for num, comp in enumerate(components) if num not in left]
