use serde::{Deserialize, Serialize};

use super::{ComponentAutomaton, CompositeSystem, DesError, EventLabel, LabelId};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemDoc {
    alphabet: Vec<LabelDoc>,
    components: Vec<ComponentDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LabelDoc {
    id: LabelId,
    name: String,
    controllable: bool,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ComponentDoc {
    state_count: u32,
    initial: u32,
    marked: Vec<u32>,
    local_alphabet: Vec<LabelId>,
    transitions: Vec<[u32; 3]>,
}

/// Parses the JSON automaton interchange format.
pub fn parse_system(document: &str) -> Result<CompositeSystem, DesError> {
    let doc: SystemDoc =
        serde_json::from_str(document).map_err(|e| DesError::Malformed(e.to_string()))?;
    let alphabet_len = doc.alphabet.len();
    let alphabet = doc
        .alphabet
        .into_iter()
        .map(|l| EventLabel {
            id: l.id,
            name: l.name,
            controllable: l.controllable,
        })
        .collect();
    let mut components = Vec::with_capacity(doc.components.len());
    for (idx, c) in doc.components.into_iter().enumerate() {
        if let Some(&label) = c
            .local_alphabet
            .iter()
            .chain(c.transitions.iter().map(|t| &t[1]))
            .find(|&&l| l as usize >= alphabet_len)
        {
            return Err(DesError::UnknownLabel {
                component: idx,
                label,
            });
        }
        components.push(ComponentAutomaton::new(
            idx,
            c.state_count,
            c.initial,
            c.marked,
            c.local_alphabet,
            c.transitions
                .into_iter()
                .map(|[from, label, to]| (from, label, to)),
        )?);
    }
    CompositeSystem::new(alphabet, components)
}

/// Canonical serialization: fixed field order, sorted sets, compact JSON with
/// a trailing newline.
pub fn serialize_system(sys: &CompositeSystem) -> String {
    let doc = SystemDoc {
        alphabet: sys
            .alphabet()
            .iter()
            .map(|l| LabelDoc {
                id: l.id,
                name: l.name.clone(),
                controllable: l.controllable,
            })
            .collect(),
        components: sys
            .components()
            .iter()
            .map(|c| ComponentDoc {
                state_count: c.state_count(),
                initial: c.initial(),
                marked: c.marked_states().collect(),
                local_alphabet: c.local_alphabet().to_vec(),
                transitions: c.transitions().map(|(f, l, t)| [f, l, t]).collect(),
            })
            .collect(),
    };
    let mut out = serde_json::to_string(&doc).expect("system document serializes");
    out.push('\n');
    out
}
