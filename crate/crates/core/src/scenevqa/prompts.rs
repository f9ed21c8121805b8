//! Fixed prompt texts.

/// GraphVQA question; `{object list}` is replaced by the comma-joined labels.
pub const GRAPH_VQA_PROMPT: &str = r#"Please determine the hierarchical relationships between the objects ({object list}) marked as point in the image. Use only these four hierarchical relationships: support, contain, attach, and hang.

For example, use "support" for objects on a table or chair, "contain" for objects inside a bookshelf or bottle, and "hang" for objects on the wall like doors, curtains, or paintings. Objects on the ceiling, such as lights, should use "attach". If there's a drawer in a table or objects inside the drawer, the relationship should be "contain". For objects on the floor, like tables on a carpet, the relationship is "floor supports rug supports table".

Present the relationships in a JSON tree format, with the ceiling, wall, floor as the root nodes. Here's an example JSON structure:
{
    "ceiling": {
        "attach": [
            {
                "object": {}
            }
        ]
    },
    "wall": {},
    "floor": {
        "support": [
            {
                "object": {
                    "support": [
                        {
                            "object": {
                                "support": [
                                    {
                                        "object": {}
                                    }
                                ]
                            }
                        },
                        {
                            "object": {}
                        }
                    ]
                }
            },
            {
                "object": {}
            }
        ]
    }
}"#;

pub const OBJECT_LIST_PLACEHOLDER: &str = "{object list}";

/// Image-text scoring prompt for images to keep.
pub const SCENE_POSITIVE_PROMPT: &str = "An iphone photo of an indoor scene.";

/// Image-text scoring prompts for images to reject.
pub const SCENE_NEGATIVE_PROMPTS: [&str; 8] = [
    "A close up shot of a single object.",
    "A product displayed in front of a white background.",
    "An artwork.",
    "A painting.",
    "A screenshot of graphics user interface.",
    "A piece of text.",
    "A sketch.",
    "A cartoon.",
];

pub fn graph_question(labels: &[&str]) -> alloc::string::String {
    GRAPH_VQA_PROMPT.replace(OBJECT_LIST_PLACEHOLDER, &labels.join(", "))
}
