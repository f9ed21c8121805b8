//! Prompt templates sent to vision-language backends.

pub const SYSTEM_PROMPT: &str = "You are an assistant who perfectly describes images.";

pub const OBJECT_PROMPT: &str = r#"Given an image, please create a JSON representation where each entry consists of a key "object"  with a numerical suffix starting from 1. The value of each "object" key contains a "description" key and a "container" key, in which the value of the "description" key is a concise, up to eight-word sentence describing each main, clear, distinct object in the image while the "container" key's value should be either "True" or "False", indicating whether the targeted object has other sub-objects on or inside it.

Please note the following requirements:

1. Each entry should uniquely describe one element without repeating values.

2. For the "container" key, its value should be "True" if the object is containing or supporting other objects, and "False" otherwise.

3. The possible container that could only be a desk, shelf, bed or other similar items. Please consider a desk and its tablecloth as one object.

4. Do not miss any suitable object.

5. Ensure that your output can be parsed by python's  json.loads() directly.

Following is an example: {"object1": {"description": "trash bin with liner", "container": "False"}, "object2": {"description": "retangular dinner table with tablecloths", "container": "True"}, "object3": {"description": "wooden shelf with electronic devices", "container": "True" }}"#;

/// `{container}` is replaced by the container description.
pub const SUBOBJECT_PROMPT: &str = r#"Given an image of a "{container}", please create a JSON representation where each entry consists of a key "object" with a numerical suffix starting from 1. The value of each "object" key contains a "description" key alue of the "description" key is a concise, up to eight-word sentence describing each main, clear, distinct object on or inside the "{container}".
Please note the following requirements:

1. Each entry should uniquely describe one element without repeating values.

2. Only describe the objects that is on or inside the "{container}". Please ignore other parts of the image.

3. Do not miss any small object that is on or inside the "{container}".

4. Do not include the objects that are near, under or behind the "{container}". If there is no suitable object, please return -1.

5. Do not include the "{container}" in your output.

6. Ensure that the described objects are suitable for measuring distances between them and exclude elements like walls or floors.

7. Make sure that your output can be parsed by python's  json.loads() directly.

Following is an example: {"object1": {"description": "rectangular silver tray"}, "object2": { "description": "bottle of wine on table"}, "object3": {"description": "round decorative doily"}}"#;

/// `{count}`, `{colors}` and `{description}` are filled per call.
pub const SELECT_PROMPT: &str = r#"Please analyze an image that contains {count} bounding boxes.
Each bounding box corresponds to one color.
Your task is to identify the bounding box that best corresponds to the provided description of an object within the image and return the color of your selected bounding box.

In the image, there are {count} bounding boxes.
The colors of these boxes include: {colors}.

Following is the requirement:

1. You must select the most appropriate bounding box and object based on orientation words within the description, such as "left", "center/middle" or "right".
For instance, if an image contains three side-by-side computers, and the description states "center computer", you should output the color corresponding to the computer in the center.

2. It is possible that there are three similar objects (left, center and right respectively) in the image while only two of thems are enclosed by bounding boxes.
In this situation, you still need to select the the suitable bounding box based on the relative position of these three objects.

3. Please provide an output in JSON format with the keys "reason" and "color".
In the "reason" value, explain the rationale behind your selection, and in the "color" value, return the color of your chosen bounding box.

4. If there is no orientation word, you should select the bounding box that best corresponds to the given description. If none of the bounding box meets the description, you should select one randomly.

5. You can only select one box and the "color" value can only be one of the element from this color list: {colors}

6. The order of the color list is meaningless.
You should select the bounding box and its corresponding color according to the description.

7. Make sure that your output can be parsed by python's json.loads() directly.

Following is the provided description: "{description}" "#;

pub fn subobject_prompt(container: &str) -> String {
    SUBOBJECT_PROMPT.replace("{container}", container)
}

pub fn select_prompt(colors: &[&str], description: &str) -> String {
    SELECT_PROMPT
        .replace("{count}", &colors.len().to_string())
        .replace("{colors}", &colors.join(", "))
        .replace("{description}", description)
}
