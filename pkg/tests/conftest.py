import httpx
import pytest

from inkflux.cli import InProcessTransport
from inkflux.service import app


@pytest.fixture(scope="session")
def service_client():
    with httpx.Client(transport=InProcessTransport(app), base_url="http://svc") as client:
        yield client


@pytest.fixture()
def tiny_log_text() -> str:
    return "\n".join(
        [
            '{"seq":0,"ts_ms":1000,"doc":"d","kind":"text_change","ops":[{"insert":"Hello world. "}]}',
            '{"seq":1,"ts_ms":2000,"doc":"d","kind":"task_created","task_id":"t1",'
            '"task_type":"crowd","snippet_start":0,"snippet_len":11,"num_ideas":2}',
            '{"seq":2,"ts_ms":9000,"doc":"d","kind":"suggestion_delivered","task_id":"t1",'
            '"suggestion_id":"s1","tab_index":0,"text":"Nosu toto nuru. Puro tonu vosu."}',
            '{"seq":3,"ts_ms":22000,"doc":"d","kind":"suggestion_read","suggestion_id":"s1"}',
        ]
    ) + "\n"
